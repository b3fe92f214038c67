//! The discrete-harmonic extension of boundary data and the static
//! boundary semi-norm.
//!
//! Given data g on the boundary layer, the extension is the unique field
//! with those boundary values minimizing the h1 seminorm; equivalently
//! the solution of div_{R,eps} D_{R,eps} y = 0 at every interior site.
//! The constrained system is symmetric positive definite and is solved by
//! matrix-free conjugate gradients.

use super::domain::LatticeDomain;
use super::field::{BoundaryData, LatticeField};
use super::ops::{gram_scatter, norm_h1};
use crate::solver::{conjugate_gradient, CgFailure};
use crate::{Error, Result};
use std::sync::Arc;

const CG_REL_TOL: f64 = 1e-10;

use super::ops::{embed_interior, restrict_interior};

fn interior_dof_count(dom: &LatticeDomain) -> usize {
    dom.interior().len() * dom.dim()
}

/// Apply the interior block of the h1 Gram operator to interior values.
pub(crate) fn interior_gram_apply(dom: &Arc<LatticeDomain>, v: &[f64], out: &mut [f64]) {
    let f = embed_interior(dom, v);
    let w = gram_scatter(&f, |_, du| du.to_vec());
    restrict_interior(&w, out);
}

/// T_eps g: the discrete-harmonic extension of boundary data.
pub fn harmonic_extension(domain: &Arc<LatticeDomain>, g: &BoundaryData) -> Result<LatticeField> {
    let n = interior_dof_count(domain);
    let dim = domain.dim();

    // right-hand side: -(Gram applied to the boundary embedding)
    let gb = g.embed();
    let wb = gram_scatter(&gb, |_, du| du.to_vec());
    let mut b = vec![0.0; n];
    restrict_interior(&wb, &mut b);
    for v in &mut b {
        *v = -*v;
    }

    let max_iter =
        50 * (domain.site_count() as f64).powf(1.0 / dim as f64).ceil() as usize + 100;
    let mut x = vec![0.0; n];
    let apply = |v: &[f64], out: &mut [f64]| interior_gram_apply(domain, v, out);
    match conjugate_gradient(apply, &b, &mut x, CG_REL_TOL, max_iter) {
        Ok(_) => {}
        Err(CgFailure::Stalled { rel_residual, iterations }) => {
            return Err(Error::SolverDiverged { residual: rel_residual, iterations })
        }
        Err(CgFailure::Indefinite) => {
            return Err(Error::SolverDiverged { residual: f64::NAN, iterations: 0 })
        }
    }

    let mut y = gb;
    let d = domain.dim();
    for (j, &sid) in domain.interior().iter().enumerate() {
        y.set_site(sid as usize, &x[j * d..(j + 1) * d]);
    }
    Ok(y)
}

/// || g ||_{boundary,0} = || T_eps g ||_{h1_eps}; zero exactly when g
/// extends to a field with vanishing difference quotients.
pub fn boundary_norm_static(domain: &Arc<LatticeDomain>, g: &BoundaryData) -> Result<f64> {
    Ok(norm_h1(&harmonic_extension(domain, g)?))
}
