//! The time-dependent boundary norm.
//!
//! Boundary data g on the boundary layer times a uniform time grid is
//! measured by the square root of a quadratic space-time functional
//! evaluated at its constrained minimizer:
//!
//!   F(z) = |z(0)|_l2^2 + |z(0)|_h1^2 + |z'(0)|_l2^2
//!        + int_0^T |z|_h1^2 + |z'|_h1^2 + |z''|_l2^2 dt
//!
//! minimized over space-time fields matching g on the boundary layer at
//! every grid time. Time derivatives use second-order differences
//! (central inside, one-sided at the ends), the time integral uses the
//! trapezoid rule; both are consistent at the square of the step. The
//! minimizer is the discrete extension operator applied to g.

use crate::lattice::ops::{embed_interior, restrict_interior};
use crate::lattice::{gram_scatter, LatticeDomain, LatticeField};
use crate::solver::{preconditioned_cg, CgFailure};
use crate::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub nodes: usize,
}

impl TimeGrid {
    /// Uniform grid over [0, t1] with step close to `target_dt` and at
    /// least three nodes.
    pub fn span(t1: f64, target_dt: f64) -> Self {
        let n = ((t1 / target_dt).ceil() as usize + 1).max(3);
        Self { dt: t1 / (n - 1) as f64, nodes: n }
    }

    pub fn time(&self, j: usize) -> f64 {
        self.dt * j as f64
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.nodes - 1) as f64
    }
}

/// Boundary-layer data sampled on a time grid.
#[derive(Debug, Clone)]
pub struct BoundarySignal {
    domain: Arc<LatticeDomain>,
    grid: TimeGrid,
    /// (j * nb + b) * d + i
    values: Vec<f64>,
}

impl BoundarySignal {
    pub fn from_fn(
        domain: Arc<LatticeDomain>,
        grid: TimeGrid,
        f: impl Fn(&[f64; 3], f64) -> [f64; 3],
    ) -> Self {
        let d = domain.dim();
        let nb = domain.boundary_layer().len();
        let mut values = vec![0.0; grid.nodes * nb * d];
        for j in 0..grid.nodes {
            let t = grid.time(j);
            for (b, &sid) in domain.boundary_layer().iter().enumerate() {
                let v = f(&domain.site_position(sid as usize), t);
                values[(j * nb + b) * d..(j * nb + b) * d + d].copy_from_slice(&v[..d]);
            }
        }
        Self { domain, grid, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Largest absolute entry, as a magnitude scale for tolerances.
    pub fn sup_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// The data at one grid time as a full field vanishing off the
    /// boundary layer.
    pub fn slice_field(&self, j: usize) -> LatticeField {
        let d = self.domain.dim();
        let nb = self.domain.boundary_layer().len();
        let mut f = LatticeField::zeros(self.domain.clone());
        for (b, &sid) in self.domain.boundary_layer().iter().enumerate() {
            f.set_site(sid as usize, &self.values[(j * nb + b) * d..(j * nb + b) * d + d]);
        }
        f
    }
}

/// A full lattice field per time-grid node.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    domain: Arc<LatticeDomain>,
    grid: TimeGrid,
    /// (j * nsites + s) * d + i
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(domain: Arc<LatticeDomain>, grid: TimeGrid) -> Self {
        let n = grid.nodes * domain.site_count() * domain.dim();
        Self { domain, grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn field_at(&self, j: usize) -> LatticeField {
        let d = self.domain.dim();
        let ns = self.domain.site_count();
        let mut f = LatticeField::zeros(self.domain.clone());
        f.values_mut()
            .copy_from_slice(&self.values[j * ns * d..(j + 1) * ns * d]);
        f
    }

    pub fn set_field_at(&mut self, j: usize, f: &LatticeField) {
        let d = self.domain.dim();
        let ns = self.domain.site_count();
        self.values[j * ns * d..(j + 1) * ns * d].copy_from_slice(f.values());
    }

    /// Piecewise-linear sample of value and time derivative at an
    /// arbitrary time within the grid span.
    pub fn sample(&self, t: f64) -> (LatticeField, LatticeField) {
        let n = self.grid.nodes;
        let dt = self.grid.dt;
        let pos = (t / dt).clamp(0.0, (n - 1) as f64);
        let j = (pos.floor() as usize).min(n - 2);
        let s = pos - j as f64;
        let a = self.field_at(j);
        let b = self.field_at(j + 1);
        let mut val = a.clone();
        val.scale(1.0 - s);
        val.axpy(s, &b);
        let mut der = b;
        der.axpy(-1.0, &a);
        der.scale(1.0 / dt);
        (val, der)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormKind {
    /// eps^d-weighted l2 over interior sites.
    L2,
    /// h1 Gram over the semi-interior.
    H1,
}

/// One quadratic term of F: weight * | sum_c coef_c z_{t_c} |_form^2.
struct Term {
    times: Vec<(usize, f64)>,
    weight: f64,
    form: FormKind,
}

fn build_terms(grid: TimeGrid) -> Vec<Term> {
    let n = grid.nodes;
    let dt = grid.dt;
    let mut terms = Vec::new();

    // values at t = 0
    terms.push(Term { times: vec![(0, 1.0)], weight: 1.0, form: FormKind::L2 });
    terms.push(Term { times: vec![(0, 1.0)], weight: 1.0, form: FormKind::H1 });

    let dot_stencil = |j: usize| -> Vec<(usize, f64)> {
        if j == 0 {
            vec![(0, -1.5 / dt), (1, 2.0 / dt), (2, -0.5 / dt)]
        } else if j == n - 1 {
            vec![(n - 1, 1.5 / dt), (n - 2, -2.0 / dt), (n - 3, 0.5 / dt)]
        } else {
            vec![(j + 1, 0.5 / dt), (j - 1, -0.5 / dt)]
        }
    };
    let ddot_stencil = |j: usize| -> Vec<(usize, f64)> {
        let c = j.clamp(1, n - 2);
        vec![
            (c - 1, 1.0 / (dt * dt)),
            (c, -2.0 / (dt * dt)),
            (c + 1, 1.0 / (dt * dt)),
        ]
    };

    // initial velocity
    terms.push(Term { times: dot_stencil(0), weight: 1.0, form: FormKind::L2 });

    // trapezoid-in-time integrals
    for j in 0..n {
        let wt = if j == 0 || j == n - 1 { 0.5 * dt } else { dt };
        terms.push(Term { times: vec![(j, 1.0)], weight: wt, form: FormKind::H1 });
        terms.push(Term { times: dot_stencil(j), weight: wt, form: FormKind::H1 });
        terms.push(Term { times: ddot_stencil(j), weight: wt, form: FormKind::L2 });
    }
    terms
}

fn combine(z: &SpaceTimeField, times: &[(usize, f64)]) -> LatticeField {
    let mut w = LatticeField::zeros(z.domain.clone());
    for &(j, c) in times {
        let f = z.field_at(j);
        w.axpy(c, &f);
    }
    w
}

fn form_value(f: &LatticeField, kind: FormKind) -> f64 {
    match kind {
        FormKind::L2 => crate::lattice::norm_l2(f).powi(2),
        FormKind::H1 => crate::lattice::norm_h1(f).powi(2),
    }
}

/// X(w): the field v with (w, u)_X = eps^d sum_s v(s) . u(s).
fn form_apply(dom: &Arc<LatticeDomain>, f: &LatticeField, kind: FormKind) -> LatticeField {
    match kind {
        FormKind::L2 => {
            let mut out = LatticeField::zeros(dom.clone());
            let d = dom.dim();
            for &sid in dom.interior() {
                let src = f.site(sid as usize);
                let dst = &mut out.values_mut()[sid as usize * d..sid as usize * d + d];
                dst.copy_from_slice(src);
            }
            out
        }
        FormKind::H1 => gram_scatter(f, |_, du| du.to_vec()),
    }
}

/// F(z) for a full space-time field.
pub fn functional_value(z: &SpaceTimeField) -> f64 {
    let terms = build_terms(z.grid);
    let mut total = 0.0;
    for term in &terms {
        let w = combine(z, &term.times);
        total += term.weight * form_value(&w, term.form);
    }
    total
}

/// Gradient of F/2 with respect to every site value (boundary rows
/// included; callers restrict as needed).
fn half_gradient(z: &SpaceTimeField, terms: &[Term]) -> SpaceTimeField {
    let dom = z.domain.clone();
    let epsd = dom.epsilon().powi(dom.dim() as i32);
    let d = dom.dim();
    let ns = dom.site_count();
    let mut g = SpaceTimeField::zeros(dom.clone(), z.grid);
    for term in terms {
        let w = combine(z, &term.times);
        let v = form_apply(&dom, &w, term.form);
        for &(j, c) in &term.times {
            let dst = &mut g.values[j * ns * d..(j + 1) * ns * d];
            for (dv, sv) in dst.iter_mut().zip(v.values()) {
                *dv += term.weight * c * epsd * sv;
            }
        }
    }
    g
}

pub struct DynNormReport {
    pub norm: f64,
    pub minimizer: SpaceTimeField,
    pub cg_iterations: usize,
}

/// Minimize F subject to the boundary constraint and return the
/// discrete extension of g (the minimizer).
///
/// Restricted to the free (interior) values, the half-Hessian of F has
/// the tensor form T_l2 (x) eps^d I + T_h1 (x) eps^d G with small
/// symmetric time matrices T and the spatial interior Gram operator G.
/// The second-difference rows of T_l2 scale like dt^-4 and defeat plain
/// CG, so the time pencil is diagonalized once (T_h1 is positive
/// definite) and each time mode becomes an independent, well-conditioned
/// spatial solve (mu_m I + G) x_m = b_m.
pub fn k_eps_minimizer(signal: &BoundarySignal) -> Result<DynNormReport> {
    let dom = signal.domain().clone();
    let grid = signal.grid();
    let d = dom.dim();
    let ni = dom.interior().len();
    let nsp = ni * d;
    let nt = grid.nodes;
    let terms = build_terms(grid);

    // time matrices: each term adds weight * c c^T to its form's matrix
    let mut t_l2 = vec![0.0; nt * nt];
    let mut t_h1 = vec![0.0; nt * nt];
    for term in &terms {
        let target = match term.form {
            FormKind::L2 => &mut t_l2,
            FormKind::H1 => &mut t_h1,
        };
        for &(a, ca) in &term.times {
            for &(bb, cb) in &term.times {
                target[a * nt + bb] += term.weight * ca * cb;
            }
        }
    }

    // simultaneous diagonalization of (T_l2, T_h1): with S = T_h1^{-1/2}
    // and S T_l2 S = U diag(mu) U^T, the basis W = S U satisfies
    // W^T T_h1 W = I and W^T T_l2 W = diag(mu), mu >= 0.
    let (hv, hw) = crate::linalg::sym_eigen(nt, &t_h1);
    if hv[0] <= 0.0 {
        return Err(Error::SolverDiverged { residual: hv[0], iterations: 0 });
    }
    let mut s = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in 0..nt {
            let mut acc = 0.0;
            for k in 0..nt {
                acc += hw[i * nt + k] * hw[j * nt + k] / hv[k].sqrt();
            }
            s[i * nt + j] = acc;
        }
    }
    let mut sls = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in 0..nt {
            let mut acc = 0.0;
            for p in 0..nt {
                let mut row = 0.0;
                for q in 0..nt {
                    row += t_l2[p * nt + q] * s[q * nt + j];
                }
                acc += s[i * nt + p] * row;
            }
            sls[i * nt + j] = acc;
        }
    }
    let (mu, u) = crate::linalg::sym_eigen(nt, &sls);
    let mut w = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in 0..nt {
            let mut acc = 0.0;
            for k in 0..nt {
                acc += s[i * nt + k] * u[k * nt + j];
            }
            w[i * nt + j] = acc;
        }
    }

    // right-hand side: -(half gradient of F at the boundary embedding)
    let mut zb = SpaceTimeField::zeros(dom.clone(), grid);
    for j in 0..nt {
        zb.set_field_at(j, &signal.slice_field(j));
    }
    let grad = half_gradient(&zb, &terms);
    let mut b = vec![0.0; nt * nsp];
    for j in 0..nt {
        let f = grad.field_at(j);
        restrict_interior(&f, &mut b[j * nsp..(j + 1) * nsp]);
        for v in &mut b[j * nsp..(j + 1) * nsp] {
            *v = -*v;
        }
    }

    // transform the rhs into the time eigenbasis, divide out eps^d
    let epsd = dom.epsilon().powi(d as i32);
    let mut bt = vec![0.0; nt * nsp];
    for m in 0..nt {
        for j in 0..nt {
            let c = w[j * nt + m];
            if c == 0.0 {
                continue;
            }
            for q in 0..nsp {
                bt[m * nsp + q] += c * b[j * nsp + q];
            }
        }
        for q in 0..nsp {
            bt[m * nsp + q] /= epsd;
        }
    }

    // one spatial solve per time mode: (mu_m I + G) x_m = b_m
    let mut xt = vec![0.0; nt * nsp];
    let mut total_iters = 0usize;
    let max_iter = 50 * (dom.site_count() as f64).powf(1.0 / d as f64).ceil() as usize + 200;
    for m in 0..nt {
        let shift = mu[m].max(0.0);
        let apply = |v: &[f64], out: &mut [f64]| {
            crate::lattice::extension::interior_gram_apply(&dom, v, out);
            for i in 0..v.len() {
                out[i] += shift * v[i];
            }
        };
        let mut x = vec![0.0; nsp];
        match preconditioned_cg(
            apply,
            |r, z| z.copy_from_slice(r),
            &bt[m * nsp..(m + 1) * nsp],
            &mut x,
            1e-11,
            max_iter,
        ) {
            Ok(rep) => total_iters += rep.iterations,
            Err(CgFailure::Stalled { rel_residual, iterations }) => {
                return Err(Error::SolverDiverged { residual: rel_residual, iterations })
            }
            Err(CgFailure::Indefinite) => {
                return Err(Error::SolverDiverged { residual: f64::NAN, iterations: 0 })
            }
        }
        xt[m * nsp..(m + 1) * nsp].copy_from_slice(&x);
    }

    // back-transform and attach the boundary values
    let mut z = SpaceTimeField::zeros(dom.clone(), grid);
    for j in 0..nt {
        let mut dofs = vec![0.0; nsp];
        for m in 0..nt {
            let c = w[j * nt + m];
            if c == 0.0 {
                continue;
            }
            for q in 0..nsp {
                dofs[q] += c * xt[m * nsp + q];
            }
        }
        let mut f = embed_interior(&dom, &dofs);
        let bf = signal.slice_field(j);
        for &sid in dom.boundary_layer() {
            let sidx = sid as usize;
            let src = bf.site(sidx).to_vec();
            f.set_site(sidx, &src);
        }
        z.set_field_at(j, &f);
    }
    let norm = functional_value(&z).max(0.0).sqrt();
    Ok(DynNormReport { norm, minimizer: z, cg_iterations: total_iters })
}

/// The time-dependent boundary norm of g.
pub fn dyn_boundary_norm(signal: &BoundarySignal) -> Result<f64> {
    Ok(k_eps_minimizer(signal)?.norm)
}
