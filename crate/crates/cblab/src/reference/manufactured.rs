//! Manufactured continuum data: the body force that makes a chosen
//! deformation an exact solution, cube averages over lattice cells, the
//! per-site reference force of the convergence pipeline, and boundary
//! compatibility traces.

use super::family::SmoothReference;
use super::mollifier::{gauss_legendre, MollifiedReference};
use crate::lattice::LatticeDomain;
use crate::potential::{JetOrder, SitePotential};
use crate::{Error, Result};
use std::sync::Arc;

/// Body force of the manufactured motion: f = d^2_t y - div DW_cb(grad y),
/// with the divergence expanded through the Hessian contraction
/// sum_{j,q,r} (D^2 W_cb)_{(i,j),(q,r)} d_r d_j y_q.
pub fn mms_force(
    reference: &SmoothReference,
    potential: &SitePotential,
    x: &[f64; 3],
    t: f64,
) -> Result<[f64; 3]> {
    let d = reference.dim();
    let grad = reference.space_gradient(x, t);
    let jet = potential.eval_cauchy_born(&grad, JetOrder::Hessian)?;
    let c = jet.hessian.expect("hessian requested");
    let h = reference.space_hessian(x, t);
    let mut f = reference.acceleration_field(x, t);
    let m = d * d;
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            for q in 0..d {
                for r in 0..d {
                    s += c[(i * d + j) * m + (q * d + r)] * h[(q * d + j) * d + r];
                }
            }
        }
        f[i] -= s;
    }
    Ok(f)
}

/// div DW_cb(grad y)(x): the elliptic term alone.
pub fn cauchy_born_divergence(
    reference: &SmoothReference,
    potential: &SitePotential,
    x: &[f64; 3],
    t: f64,
) -> Result<[f64; 3]> {
    let acc = reference.acceleration_field(x, t);
    let f = mms_force(reference, potential, x, t)?;
    let d = reference.dim();
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = acc[i] - f[i];
    }
    Ok(out)
}

pub const DEFAULT_CELL_QUAD_ORDER: usize = 4;

/// Average of a smooth function over the cube of an interior site, by
/// tensor-product Gauss quadrature.
pub fn cell_average(
    domain: &LatticeDomain,
    site: usize,
    order: usize,
    f: impl Fn(&[f64; 3]) -> [f64; 3],
) -> Result<[f64; 3]> {
    if !domain.is_interior(site) {
        return Err(Error::OutOfRange { site, required: "interior" });
    }
    let d = domain.dim();
    let eps = domain.epsilon();
    let center = domain.site_position(site);
    let (nodes, weights) = gauss_legendre(order);
    let mut out = [0.0; 3];
    let mut idx = vec![0usize; d];
    loop {
        let mut x = center;
        let mut w = 1.0;
        for i in 0..d {
            x[i] += 0.5 * eps * nodes[idx[i]];
            w *= weights[idx[i]];
        }
        let v = f(&x);
        for i in 0..d {
            out[i] += w * v[i];
        }
        let mut c = d;
        loop {
            if c == 0 {
                break;
            }
            c -= 1;
            idx[c] += 1;
            if idx[c] < order {
                break;
            }
            idx[c] = 0;
            if c == 0 {
                c = usize::MAX;
                break;
            }
        }
        if c == usize::MAX {
            break;
        }
    }
    // GL weights sum to 2 per dimension; the average divides by 2^d
    for o in out.iter_mut().take(d) {
        *o /= 2.0_f64.powi(d as i32);
    }
    Ok(out)
}

/// The reference force of the convergence pipeline at an interior site:
/// cell average of the manufactured force, plus the mollified second
/// time derivative at the site, minus the cell average of the
/// unmollified second time derivative.
pub fn f_ref(
    mollified: &MollifiedReference,
    potential: &SitePotential,
    domain: &LatticeDomain,
    site: usize,
    t: f64,
    cell_order: usize,
) -> Result<[f64; 3]> {
    let reference = mollified.reference();
    let d = reference.dim();
    let avg = cell_average(domain, site, cell_order, |x| {
        let f = mms_force(reference, potential, x, t).unwrap_or([f64::NAN; 3]);
        let acc = reference.acceleration_field(x, t);
        [f[0] - acc[0], f[1] - acc[1], f[2] - acc[2]]
    })?;
    if avg.iter().take(d).any(|v| !v.is_finite()) {
        return Err(Error::OutsideAdmissibleSet {
            offset: [0; 3],
            length: f64::NAN,
            floor: potential.r_min(),
            site: Some(site),
        });
    }
    let x = domain.site_position(site);
    let acc_ref = mollified.acceleration_field(&x, t);
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = avg[i] + acc_ref[i];
    }
    Ok(out)
}

/// Manufactured data bundle: boundary values are the trace of the
/// deformation, initial data its time slice at t = 0, the body force the
/// manufactured one. Optional perturbations support the compatibility
/// diagnostics.
#[derive(Clone)]
pub struct ManufacturedData {
    pub reference: Arc<SmoothReference>,
    pub potential: Arc<SitePotential>,
    /// Added to g along the outward normal (boundary trace offset).
    pub g_normal_offset: f64,
    /// Interior bump added to the initial velocity: (center, width,
    /// amplitude); vanishes outside |x - center| < width.
    pub h1_bump: Option<([f64; 3], f64, f64)>,
}

impl ManufacturedData {
    pub fn new(reference: Arc<SmoothReference>, potential: Arc<SitePotential>) -> Self {
        Self { reference, potential, g_normal_offset: 0.0, h1_bump: None }
    }

    pub fn f(&self, x: &[f64; 3], t: f64) -> Result<[f64; 3]> {
        mms_force(&self.reference, &self.potential, x, t)
    }

    pub fn g(&self, x: &[f64; 3], t: f64, normal: &[f64; 3]) -> [f64; 3] {
        let mut v = self.reference.value(x, t);
        for i in 0..self.reference.dim() {
            v[i] += self.g_normal_offset * normal[i];
        }
        v
    }

    pub fn g_dt(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        self.reference.velocity(x, t)
    }

    pub fn g_dtt(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        self.reference.acceleration_field(x, t)
    }

    pub fn h0(&self, x: &[f64; 3]) -> [f64; 3] {
        self.reference.value(x, 0.0)
    }

    pub fn h1(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut v = self.reference.velocity(x, 0.0);
        if let Some((c, w, a)) = self.h1_bump {
            let r2: f64 = (0..self.reference.dim())
                .map(|i| (x[i] - c[i]) * (x[i] - c[i]))
                .sum();
            let q = r2 / (w * w);
            if q < 1.0 {
                let b = a * (-1.0 / (1.0 - q)).exp() * std::f64::consts::E;
                for vi in v.iter_mut().take(self.reference.dim()) {
                    *vi += b;
                }
            }
        }
        v
    }
}

/// Boundary traces of the first compatibility fields:
/// u0 = h0 - g(., 0), u1 = h1 - g_t(., 0),
/// u2 = f(., 0) - g_tt(., 0) + div DW_cb(grad h0).
/// For manufactured data all three vanish identically.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub max_u0: f64,
    pub max_u1: f64,
    pub max_u2: f64,
    pub sample_count: usize,
}

/// Points on the boundary of the descriptor, with outward normals.
pub fn boundary_samples(
    descriptor: &crate::lattice::DomainDescriptor,
    per_face: usize,
) -> Vec<([f64; 3], [f64; 3])> {
    use crate::lattice::DomainShape;
    let dim = descriptor.dim();
    let mut out = Vec::new();
    match descriptor.shape() {
        DomainShape::Box { lo, hi } => {
            match dim {
                1 => {
                    out.push(([lo[0], 0.0, 0.0], [-1.0, 0.0, 0.0]));
                    out.push(([hi[0], 0.0, 0.0], [1.0, 0.0, 0.0]));
                }
                2 => {
                    for side in 0..2 {
                        for axis in 0..2 {
                            let val = if side == 0 { lo[axis] } else { hi[axis] };
                            let oth = 1 - axis;
                            for m in 0..per_face {
                                let s = lo[oth]
                                    + (hi[oth] - lo[oth]) * (m as f64 + 0.5) / per_face as f64;
                                let mut x = [0.0; 3];
                                x[axis] = val;
                                x[oth] = s;
                                let mut n = [0.0; 3];
                                n[axis] = if side == 0 { -1.0 } else { 1.0 };
                                out.push((x, n));
                            }
                        }
                    }
                }
                _ => {
                    for side in 0..2 {
                        for axis in 0..3 {
                            let val = if side == 0 { lo[axis] } else { hi[axis] };
                            let (o1, o2) = match axis {
                                0 => (1, 2),
                                1 => (0, 2),
                                _ => (0, 1),
                            };
                            for m1 in 0..per_face {
                                for m2 in 0..per_face {
                                    let s1 = lo[o1]
                                        + (hi[o1] - lo[o1]) * (m1 as f64 + 0.5)
                                            / per_face as f64;
                                    let s2 = lo[o2]
                                        + (hi[o2] - lo[o2]) * (m2 as f64 + 0.5)
                                            / per_face as f64;
                                    let mut x = [0.0; 3];
                                    x[axis] = val;
                                    x[o1] = s1;
                                    x[o2] = s2;
                                    let mut n = [0.0; 3];
                                    n[axis] = if side == 0 { -1.0 } else { 1.0 };
                                    out.push((x, n));
                                }
                            }
                        }
                    }
                }
            }
        }
        DomainShape::Ball { center, radius } => match dim {
            1 => {
                out.push(([center[0] - radius, 0.0, 0.0], [-1.0, 0.0, 0.0]));
                out.push(([center[0] + radius, 0.0, 0.0], [1.0, 0.0, 0.0]));
            }
            2 => {
                let n = 4 * per_face.max(1);
                for m in 0..n {
                    let th = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
                    let dir = [th.cos(), th.sin(), 0.0];
                    out.push((
                        [center[0] + radius * dir[0], center[1] + radius * dir[1], 0.0],
                        dir,
                    ));
                }
            }
            _ => {
                // Fibonacci sphere
                let n = 8 * per_face.max(1);
                let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
                for m in 0..n {
                    let z = 1.0 - 2.0 * (m as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = 2.0 * std::f64::consts::PI * m as f64 / golden;
                    let dir = [r * th.cos(), r * th.sin(), z];
                    out.push((
                        [
                            center[0] + radius * dir[0],
                            center[1] + radius * dir[1],
                            center[2] + radius * dir[2],
                        ],
                        dir,
                    ));
                }
            }
        },
    }
    out
}

/// Evaluate the compatibility traces at boundary sample points and
/// report their largest magnitudes.
pub fn compatibility_check(
    data: &ManufacturedData,
    descriptor: &crate::lattice::DomainDescriptor,
    order: usize,
) -> Result<CompatibilityReport> {
    let d = data.reference.dim();
    let samples = boundary_samples(descriptor, 8);
    let mut max_u = [0.0f64; 3];
    for (x, n) in &samples {
        let g0 = data.g(x, 0.0, n);
        let h0 = data.h0(x);
        for i in 0..d {
            max_u[0] = max_u[0].max((h0[i] - g0[i]).abs());
        }
        if order >= 1 {
            let g1 = data.g_dt(x, 0.0);
            let h1 = data.h1(x);
            for i in 0..d {
                max_u[1] = max_u[1].max((h1[i] - g1[i]).abs());
            }
        }
        if order >= 2 {
            let f0 = data.f(x, 0.0)?;
            let g2 = data.g_dtt(x, 0.0);
            let div = cauchy_born_divergence(&data.reference, &data.potential, x, 0.0)?;
            for i in 0..d {
                max_u[2] = max_u[2].max((f0[i] - g2[i] + div[i]).abs());
            }
        }
    }
    Ok(CompatibilityReport {
        max_u0: max_u[0],
        max_u1: max_u[1],
        max_u2: max_u[2],
        sample_count: samples.len(),
    })
}
