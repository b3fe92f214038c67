//! Domain descriptors and the epsilon-dependent site sets.

use super::stencil::InteractionStencil;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Open bounded domains with analytically computable boundary distance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainShape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainDescriptor {
    dim: usize,
    shape: DomainShape,
}

impl DomainDescriptor {
    pub fn new(dim: usize, shape: DomainShape) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        match &shape {
            DomainShape::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::Config("box corner length != dimension".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::Config("box is empty or degenerate".into()));
                }
            }
            DomainShape::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::Config("ball center length != dimension".into()));
                }
                if !(*radius > 0.0) {
                    return Err(Error::Config("ball radius must be positive".into()));
                }
            }
        }
        Ok(Self { dim, shape })
    }

    pub fn unit_box(dim: usize) -> Self {
        Self::new(dim, DomainShape::Box { lo: vec![0.0; dim], hi: vec![1.0; dim] }).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn boundary_distance(&self, x: &[f64; 3]) -> f64 {
        match &self.shape {
            DomainShape::Box { lo, hi } => {
                let mut d = f64::INFINITY;
                for i in 0..self.dim {
                    d = d.min(x[i] - lo[i]).min(hi[i] - x[i]);
                }
                d
            }
            DomainShape::Ball { center, radius } => {
                let mut r2 = 0.0;
                for i in 0..self.dim {
                    let t = x[i] - center[i];
                    r2 += t * t;
                }
                radius - r2.sqrt()
            }
        }
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        self.boundary_distance(x) > 0.0
    }

    /// Axis-aligned bounding box, zero-padded beyond `dim`.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo3 = [0.0; 3];
        let mut hi3 = [0.0; 3];
        match &self.shape {
            DomainShape::Box { lo, hi } => {
                lo3[..self.dim].copy_from_slice(&lo[..self.dim]);
                hi3[..self.dim].copy_from_slice(&hi[..self.dim]);
            }
            DomainShape::Ball { center, radius } => {
                for i in 0..self.dim {
                    lo3[i] = center[i] - radius;
                    hi3[i] = center[i] + radius;
                }
            }
        }
        (lo3, hi3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteClass {
    /// dist > 2 eps R0: equations of motion / variations act here.
    Interior,
    /// eps R0 < dist <= 2 eps R0: difference quotients defined, data
    /// prescribed (part of the boundary layer).
    SemiInteriorOnly,
    /// dist <= eps R0: data prescribed.
    BoundaryLayer,
}

/// A bounded domain sampled by the lattice eps*Z^d, with the three site
/// sets precomputed and a dense site indexing (row-major over the integer
/// coordinates).
#[derive(Debug)]
pub struct LatticeDomain {
    descriptor: DomainDescriptor,
    epsilon: f64,
    stencil: InteractionStencil,
    sites: Vec<[i64; 3]>,
    index_of: HashMap<[i64; 3], u32>,
    class: Vec<SiteClass>,
    interior: Vec<u32>,
    semi_interior: Vec<u32>,
    boundary_layer: Vec<u32>,
    /// site id -> position in `semi_interior`, u32::MAX if not semi-interior
    semi_pos: Vec<u32>,
    /// semi position * n_offsets + k -> site id of x + eps*rho_k
    neighbor: Vec<u32>,
}

/// Construct the index sets for a domain at spacing `epsilon`.
///
/// Fails with `EmptyInterior` when no site survives the interior distance
/// cut, which signals that `epsilon` is too large for the domain.
pub fn build_domain(
    descriptor: DomainDescriptor,
    epsilon: f64,
    stencil: InteractionStencil,
) -> Result<LatticeDomain> {
    LatticeDomain::build(descriptor, epsilon, stencil)
}

impl LatticeDomain {
    pub fn build(
        descriptor: DomainDescriptor,
        epsilon: f64,
        stencil: InteractionStencil,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if descriptor.dim() != stencil.dim() {
            return Err(Error::Config("stencil and domain dimension mismatch".into()));
        }
        let dim = descriptor.dim();
        let (lo, hi) = descriptor.bounding_box();
        let mut zlo = [0i64; 3];
        let mut zhi = [0i64; 3];
        for i in 0..dim {
            zlo[i] = (lo[i] / epsilon).floor() as i64 - 1;
            zhi[i] = (hi[i] / epsilon).ceil() as i64 + 1;
        }

        let mut sites = Vec::new();
        let mut class = Vec::new();
        let r0 = stencil.r0();
        // The set definitions use strict inequalities; ties sit on a
        // measure-zero set but f64 rounding can land exactly on them (at
        // non-dyadic epsilon the product eps*z can round onto the
        // boundary). Tiered guards push ties strictly outside each set so
        // that every semi-interior site keeps all stencil neighbors
        // inside the domain.
        let guard = 1e-12 * (1.0 + 2.0 * epsilon * r0);
        // row-major iteration keeps the site indexing reproducible
        let mut z = zlo;
        loop {
            let x = [
                epsilon * z[0] as f64,
                epsilon * z[1] as f64,
                epsilon * z[2] as f64,
            ];
            let dist = descriptor.boundary_distance(&x);
            if dist > guard {
                let c = if dist > 2.0 * epsilon * r0 + 3.0 * guard {
                    SiteClass::Interior
                } else if dist > epsilon * r0 + 3.0 * guard {
                    SiteClass::SemiInteriorOnly
                } else {
                    SiteClass::BoundaryLayer
                };
                sites.push(z);
                class.push(c);
            }
            // advance row-major counter over [zlo, zhi]
            let mut d = dim;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                z[d] += 1;
                if z[d] <= zhi[d] {
                    break;
                }
                z[d] = zlo[d];
                if d == 0 {
                    d = usize::MAX;
                    break;
                }
            }
            if d == usize::MAX {
                break;
            }
        }

        let mut index_of = HashMap::with_capacity(sites.len());
        for (i, z) in sites.iter().enumerate() {
            index_of.insert(*z, i as u32);
        }

        let mut interior = Vec::new();
        let mut semi_interior = Vec::new();
        let mut boundary_layer = Vec::new();
        let mut semi_pos = vec![u32::MAX; sites.len()];
        for (i, c) in class.iter().enumerate() {
            match c {
                SiteClass::Interior => {
                    semi_pos[i] = semi_interior.len() as u32;
                    interior.push(i as u32);
                    semi_interior.push(i as u32);
                }
                SiteClass::SemiInteriorOnly => {
                    semi_pos[i] = semi_interior.len() as u32;
                    semi_interior.push(i as u32);
                    boundary_layer.push(i as u32);
                }
                SiteClass::BoundaryLayer => boundary_layer.push(i as u32),
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior { epsilon });
        }

        let nk = stencil.len();
        let mut neighbor = vec![u32::MAX; semi_interior.len() * nk];
        for (p, &sid) in semi_interior.iter().enumerate() {
            let z = sites[sid as usize];
            for k in 0..nk {
                let o = stencil.offset(k);
                let zn = [z[0] + o[0], z[1] + o[1], z[2] + o[2]];
                let nid = index_of
                    .get(&zn)
                    .copied()
                    .expect("semi-interior site must have all stencil neighbors in the domain");
                neighbor[p * nk + k] = nid;
            }
        }

        Ok(Self {
            descriptor,
            epsilon,
            stencil,
            sites,
            index_of,
            class,
            interior,
            semi_interior,
            boundary_layer,
            semi_pos,
            neighbor,
        })
    }

    pub fn dim(&self) -> usize {
        self.descriptor.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn descriptor(&self) -> &DomainDescriptor {
        &self.descriptor
    }

    pub fn stencil(&self) -> &InteractionStencil {
        &self.stencil
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn site_coords(&self, id: usize) -> [i64; 3] {
        self.sites[id]
    }

    pub fn site_position(&self, id: usize) -> [f64; 3] {
        let z = self.sites[id];
        [
            self.epsilon * z[0] as f64,
            self.epsilon * z[1] as f64,
            self.epsilon * z[2] as f64,
        ]
    }

    pub fn site_class(&self, id: usize) -> SiteClass {
        self.class[id]
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.class[id] == SiteClass::Interior
    }

    pub fn is_semi_interior(&self, id: usize) -> bool {
        self.class[id] != SiteClass::BoundaryLayer
    }

    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    pub fn semi_interior(&self) -> &[u32] {
        &self.semi_interior
    }

    pub fn boundary_layer(&self) -> &[u32] {
        &self.boundary_layer
    }

    pub fn site_index(&self, coords: &[i64; 3]) -> Option<usize> {
        self.index_of.get(coords).map(|&i| i as usize)
    }

    /// Position of `id` in the semi-interior list, if any.
    pub fn semi_position(&self, id: usize) -> Option<usize> {
        let p = self.semi_pos[id];
        (p != u32::MAX).then_some(p as usize)
    }

    /// Site id of x + eps * rho_k for a semi-interior site given by its
    /// semi position.
    pub fn neighbor_of_semi(&self, semi_pos: usize, k: usize) -> usize {
        self.neighbor[semi_pos * self.stencil.len() + k] as usize
    }

    /// Midpoint convention: the cube z + (-eps/2, eps/2]^d owning `x`;
    /// points on the closed upper face belong to the lower cube.
    pub fn cube_midpoint(&self, x: &[f64; 3]) -> [i64; 3] {
        let mut z = [0i64; 3];
        for i in 0..self.dim() {
            z[i] = (x[i] / self.epsilon - 0.5).ceil() as i64;
        }
        z
    }
}
