//! Vector-valued data attached to lattice sites.

use super::domain::LatticeDomain;
use std::sync::Arc;

/// One vector in R^d per site (a deformation, velocity, or force at a
/// fixed time).
#[derive(Debug, Clone)]
pub struct LatticeField {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(domain: Arc<LatticeDomain>) -> Self {
        let n = domain.site_count() * domain.dim();
        Self { domain, values: vec![0.0; n] }
    }

    /// Sample a function of the site position.
    pub fn from_fn(domain: Arc<LatticeDomain>, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let dim = domain.dim();
        let mut values = vec![0.0; domain.site_count() * dim];
        for id in 0..domain.site_count() {
            let v = f(&domain.site_position(id));
            values[id * dim..id * dim + dim].copy_from_slice(&v[..dim]);
        }
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn site(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.values[id * d..id * d + d]
    }

    pub fn site_mut(&mut self, id: usize) -> &mut [f64] {
        let d = self.dim();
        &mut self.values[id * d..id * d + d]
    }

    pub fn set_site(&mut self, id: usize, v: &[f64]) {
        let d = self.dim();
        self.values[id * d..id * d + d].copy_from_slice(&v[..d]);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// self += alpha * other
    pub fn axpy(&mut self, alpha: f64, other: &LatticeField) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }
}

/// One d x |R| matrix per semi-interior site: difference-quotient
/// matrices and the arguments of the discrete divergence live here.
/// Storage is indexed by semi position; entry (i, rho_k) sits at
/// `k*d + i`.
#[derive(Debug, Clone)]
pub struct StencilField {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl StencilField {
    pub fn zeros(domain: Arc<LatticeDomain>) -> Self {
        let n = domain.semi_interior().len() * domain.dim() * domain.stencil().len();
        Self { domain, values: vec![0.0; n] }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    /// Matrix width d * |R| per site.
    pub fn entry_len(&self) -> usize {
        self.domain.dim() * self.domain.stencil().len()
    }

    pub fn at_semi(&self, semi_pos: usize) -> &[f64] {
        let w = self.entry_len();
        &self.values[semi_pos * w..(semi_pos + 1) * w]
    }

    pub fn at_semi_mut(&mut self, semi_pos: usize) -> &mut [f64] {
        let w = self.entry_len();
        &mut self.values[semi_pos * w..(semi_pos + 1) * w]
    }

    /// Fill from a function of the site position returning a d x |R|
    /// matrix in the `k*d + i` layout.
    pub fn from_fn(domain: Arc<LatticeDomain>, f: impl Fn(&[f64; 3]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(domain.clone());
        let w = out.entry_len();
        for (p, &sid) in domain.semi_interior().iter().enumerate() {
            let m = f(&domain.site_position(sid as usize));
            debug_assert_eq!(m.len(), w);
            out.values[p * w..(p + 1) * w].copy_from_slice(&m);
        }
        out
    }
}

/// Boundary data: one vector per boundary-layer site, stored in
/// boundary-layer order.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(domain: Arc<LatticeDomain>) -> Self {
        let n = domain.boundary_layer().len() * domain.dim();
        Self { domain, values: vec![0.0; n] }
    }

    pub fn from_fn(domain: Arc<LatticeDomain>, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let dim = domain.dim();
        let mut values = vec![0.0; domain.boundary_layer().len() * dim];
        for (b, &sid) in domain.boundary_layer().iter().enumerate() {
            let v = f(&domain.site_position(sid as usize));
            values[b * dim..b * dim + dim].copy_from_slice(&v[..dim]);
        }
        Self { domain, values }
    }

    /// Restrict a full field to the boundary layer.
    pub fn from_field(field: &LatticeField) -> Self {
        let domain = field.domain().clone();
        let dim = domain.dim();
        let mut values = vec![0.0; domain.boundary_layer().len() * dim];
        for (b, &sid) in domain.boundary_layer().iter().enumerate() {
            values[b * dim..b * dim + dim].copy_from_slice(field.site(sid as usize));
        }
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, boundary_pos: usize) -> &[f64] {
        let d = self.domain.dim();
        &self.values[boundary_pos * d..(boundary_pos + 1) * d]
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Embed as a full lattice field that vanishes off the boundary layer.
    pub fn embed(&self) -> LatticeField {
        let mut f = LatticeField::zeros(self.domain.clone());
        let d = self.domain.dim();
        for (b, &sid) in self.domain.boundary_layer().iter().enumerate() {
            f.set_site(sid as usize, &self.values[b * d..(b + 1) * d]);
        }
        f
    }
}
