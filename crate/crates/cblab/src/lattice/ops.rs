//! Discrete difference operators and the lattice norms.
//!
//! The difference-quotient matrix at a semi-interior site has columns
//! (y(x + eps rho) - y(x)) / eps, one per stencil offset. The discrete
//! divergence at an interior site is the adjoint difference sum
//! sum_rho (M_rho(x) - M_rho(x - eps rho)) / eps. Norms: the l2 norm
//! weights interior sites by eps^d, the h1 seminorm weights the Frobenius
//! norm of the difference quotients over the semi-interior.

use super::field::{LatticeField, StencilField};
use crate::{Error, Result};

/// D_{R,eps} y at one semi-interior site; layout `k*d + i`.
pub fn discrete_gradient(y: &LatticeField, site: usize) -> Result<Vec<f64>> {
    let dom = y.domain();
    let p = dom
        .semi_position(site)
        .ok_or(Error::OutOfRange { site, required: "semi-interior" })?;
    let d = dom.dim();
    let nk = dom.stencil().len();
    let inv_eps = 1.0 / dom.epsilon();
    let mut m = vec![0.0; d * nk];
    let base = y.site(site);
    for k in 0..nk {
        let nb = y.site(dom.neighbor_of_semi(p, k));
        for i in 0..d {
            m[k * d + i] = (nb[i] - base[i]) * inv_eps;
        }
    }
    Ok(m)
}

/// Difference quotients at every semi-interior site.
pub fn gradient_all(y: &LatticeField) -> StencilField {
    let dom = y.domain().clone();
    let d = dom.dim();
    let nk = dom.stencil().len();
    let inv_eps = 1.0 / dom.epsilon();
    let mut out = StencilField::zeros(dom.clone());
    for (p, &sid) in dom.semi_interior().iter().enumerate() {
        let base = y.site(sid as usize);
        let m = out.at_semi_mut(p);
        for k in 0..nk {
            let nb = dom.neighbor_of_semi(p, k);
            let nbv = y.site(nb);
            for i in 0..d {
                m[k * d + i] = (nbv[i] - base[i]) * inv_eps;
            }
        }
        // borrow of `out` ends here; reborrow y next site
        let _ = m;
    }
    out
}

/// div_{R,eps} M at one interior site.
pub fn discrete_divergence(m: &StencilField, site: usize) -> Result<[f64; 3]> {
    let dom = m.domain();
    if !dom.is_interior(site) {
        return Err(Error::OutOfRange { site, required: "interior" });
    }
    let p = dom.semi_position(site).expect("interior is semi-interior");
    let d = dom.dim();
    let nk = dom.stencil().len();
    let inv_eps = 1.0 / dom.epsilon();
    let here = m.at_semi(p);
    let mut out = [0.0; 3];
    for k in 0..nk {
        // x - eps*rho_k = x + eps*(-rho_k); interior sites have all
        // stencil translates inside the semi-interior
        let back_site = dom.neighbor_of_semi(p, dom.stencil().neg(k));
        let back_pos = dom
            .semi_position(back_site)
            .expect("stencil translate of an interior site is semi-interior");
        let back = m.at_semi(back_pos);
        for i in 0..d {
            out[i] += (here[k * d + i] - back[k * d + i]) * inv_eps;
        }
    }
    Ok(out)
}

/// || u ||_{l2_eps}: eps^d-weighted l2 norm over the interior.
pub fn norm_l2(u: &LatticeField) -> f64 {
    l2_inner(u, u).sqrt()
}

pub fn l2_inner(u: &LatticeField, v: &LatticeField) -> f64 {
    let dom = u.domain();
    let d = dom.dim();
    let mut s = 0.0;
    for &sid in dom.interior() {
        let a = u.site(sid as usize);
        let b = v.site(sid as usize);
        for i in 0..d {
            s += a[i] * b[i];
        }
    }
    s * dom.epsilon().powi(d as i32)
}

/// || u ||_{h1_eps}: eps^d-weighted Frobenius norm of the difference
/// quotients over the semi-interior.
pub fn norm_h1(u: &LatticeField) -> f64 {
    h1_inner(u, u).sqrt()
}

pub fn h1_inner(u: &LatticeField, v: &LatticeField) -> f64 {
    let dom = u.domain();
    let d = dom.dim();
    let nk = dom.stencil().len();
    let inv_eps = 1.0 / dom.epsilon();
    let mut s = 0.0;
    for (p, &sid) in dom.semi_interior().iter().enumerate() {
        let ub = u.site(sid as usize);
        let vb = v.site(sid as usize);
        for k in 0..nk {
            let nb = dom.neighbor_of_semi(p, k);
            let un = u.site(nb);
            let vn = v.site(nb);
            for i in 0..d {
                s += (un[i] - ub[i]) * (vn[i] - vb[i]) * inv_eps * inv_eps;
            }
        }
    }
    s * dom.epsilon().powi(d as i32)
}

/// Copy the interior sites of a field into a packed DOF vector.
pub(crate) fn restrict_interior(f: &LatticeField, out: &mut [f64]) {
    let dom = f.domain();
    let d = dom.dim();
    for (j, &sid) in dom.interior().iter().enumerate() {
        out[j * d..(j + 1) * d].copy_from_slice(f.site(sid as usize));
    }
}

/// Embed packed interior DOFs as a field vanishing on the boundary layer.
pub(crate) fn embed_interior(
    dom: &std::sync::Arc<super::domain::LatticeDomain>,
    v: &[f64],
) -> LatticeField {
    let d = dom.dim();
    let mut f = LatticeField::zeros(dom.clone());
    for (j, &sid) in dom.interior().iter().enumerate() {
        f.set_site(sid as usize, &v[j * d..(j + 1) * d]);
    }
    f
}

/// Scatter form of a coefficient-weighted h1 form: returns w with
/// eps^d * sum_x K(x)[D u(x), D v(x)] = eps^d * sum_s w(s) . v(s)
/// for every field v. `coeff` maps a semi position and the local
/// difference matrix to K(x) * D u(x); identity coefficients give the
/// plain h1 Gram operator.
pub fn gram_scatter(
    u: &LatticeField,
    coeff: impl Fn(usize, &[f64]) -> Vec<f64>,
) -> LatticeField {
    let dom = u.domain().clone();
    let d = dom.dim();
    let nk = dom.stencil().len();
    let inv_eps = 1.0 / dom.epsilon();
    let mut w = LatticeField::zeros(dom.clone());
    let mut du = vec![0.0; d * nk];
    for (p, &sid) in dom.semi_interior().iter().enumerate() {
        let base = u.site(sid as usize);
        for k in 0..nk {
            let nbv = u.site(dom.neighbor_of_semi(p, k));
            for i in 0..d {
                du[k * d + i] = (nbv[i] - base[i]) * inv_eps;
            }
        }
        let pmat = coeff(p, &du);
        debug_assert_eq!(pmat.len(), d * nk);
        for k in 0..nk {
            let nb = dom.neighbor_of_semi(p, k);
            for i in 0..d {
                let t = pmat[k * d + i] * inv_eps;
                w.values_mut()[nb * d + i] += t;
                w.values_mut()[sid as usize * d + i] -= t;
            }
        }
    }
    w
}
