//! Site potentials on bond-difference matrices and the Cauchy-Born
//! energy density.
//!
//! A site potential W acts on a matrix A in (R^d)^R of scaled difference
//! quotients, one column per stencil offset. Built-in kinds: a harmonic
//! quadratic form and pair potentials W(A) = 1/2 sum_rho phi(|A_rho|)
//! with Lennard-Jones or Morse phi; the 1/2 avoids double counting the
//! bonds of a symmetric range. All kinds satisfy the point-reflection
//! symmetry W(A) = W(T(A)), T(A)_rho = -A_{-rho}.
//!
//! The Cauchy-Born density is the site potential evaluated along the
//! homogeneous deformation, W_cb(F) = W((F rho)_rho); its derivatives
//! follow by the chain rule through the linear map F -> (F rho)_rho.

use crate::lattice::InteractionStencil;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairKind {
    /// phi(r) = 4 w ((s/r)^12 - (s/r)^6); minimum at 2^{1/6} s.
    LennardJones { well_depth: f64, sigma: f64 },
    /// phi(r) = d (e^{-2a(r-r0)} - 2 e^{-a(r-r0)}); minimum -d at r0.
    Morse { depth: f64, stiffness: f64, r_eq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// W(A) = 1/2 sum_rho |A_rho|^2
    Harmonic,
    Pair(PairKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOrder {
    Value,
    Gradient,
    Hessian,
}

/// Value, gradient and Hessian of a site potential at one bond matrix.
/// Layouts follow the stencil-field convention: gradient entry (i, rho_k)
/// at `k*d + i`, Hessian row-major on the same flattened index.
#[derive(Debug, Clone)]
pub struct PotentialJet {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<Vec<f64>>,
}

/// Value, gradient and Hessian of the Cauchy-Born density at a d x d
/// deformation gradient (row-major; Hessian indexed by i*d+j).
#[derive(Debug, Clone)]
pub struct CauchyBornJet {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SitePotential {
    stencil: Arc<InteractionStencil>,
    kind: PotentialKind,
    /// Admissible-set floor: bond matrices require |A_rho| > r_min.
    r_min: f64,
}

impl SitePotential {
    pub fn new(stencil: Arc<InteractionStencil>, kind: PotentialKind, r_min: f64) -> Self {
        let r_min = match kind {
            PotentialKind::Harmonic => 0.0,
            PotentialKind::Pair(_) => r_min,
        };
        Self { stencil, kind, r_min }
    }

    pub fn harmonic(stencil: Arc<InteractionStencil>) -> Self {
        Self::new(stencil, PotentialKind::Harmonic, 0.0)
    }

    pub fn stencil(&self) -> &Arc<InteractionStencil> {
        &self.stencil
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn dim(&self) -> usize {
        self.stencil.dim()
    }

    /// min_rho |A_rho| - r_min; nonpositive means inadmissible.
    pub fn admissibility_margin(&self, a: &[f64]) -> f64 {
        let d = self.dim();
        let nk = self.stencil.len();
        let mut margin = f64::INFINITY;
        for k in 0..nk {
            let mut r2 = 0.0;
            for i in 0..d {
                r2 += a[k * d + i] * a[k * d + i];
            }
            margin = margin.min(r2.sqrt() - self.r_min);
        }
        margin
    }

    fn check_admissible(&self, a: &[f64], site: Option<usize>) -> Result<()> {
        if let PotentialKind::Harmonic = self.kind {
            return Ok(());
        }
        let d = self.dim();
        for k in 0..self.stencil.len() {
            let mut r2 = 0.0;
            for i in 0..d {
                r2 += a[k * d + i] * a[k * d + i];
            }
            let r = r2.sqrt();
            if r <= self.r_min {
                return Err(Error::OutsideAdmissibleSet {
                    offset: self.stencil.offset(k),
                    length: r,
                    floor: self.r_min,
                    site,
                });
            }
        }
        Ok(())
    }

    /// Evaluate W with derivatives up to `order` at a bond matrix.
    pub fn eval_site(&self, a: &[f64], order: JetOrder) -> Result<PotentialJet> {
        self.eval_site_at(a, order, None)
    }

    pub fn eval_site_at(
        &self,
        a: &[f64],
        order: JetOrder,
        site: Option<usize>,
    ) -> Result<PotentialJet> {
        let d = self.dim();
        let nk = self.stencil.len();
        debug_assert_eq!(a.len(), d * nk);
        self.check_admissible(a, site)?;
        let n = d * nk;
        let want_grad = order != JetOrder::Value;
        let want_hess = order == JetOrder::Hessian;

        match self.kind {
            PotentialKind::Harmonic => {
                let value = 0.5 * a.iter().map(|v| v * v).sum::<f64>();
                let gradient = want_grad.then(|| a.to_vec());
                let hessian = want_hess.then(|| {
                    let mut h = vec![0.0; n * n];
                    for i in 0..n {
                        h[i * n + i] = 1.0;
                    }
                    h
                });
                Ok(PotentialJet { value, gradient, hessian })
            }
            PotentialKind::Pair(pair) => {
                let mut value = 0.0;
                let mut gradient = want_grad.then(|| vec![0.0; n]);
                let mut hessian = want_hess.then(|| vec![0.0; n * n]);
                for k in 0..nk {
                    let col = &a[k * d..(k + 1) * d];
                    let r = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let (phi, dphi, ddphi) = pair_jet(pair, r);
                    value += 0.5 * phi;
                    if let Some(g) = gradient.as_deref_mut() {
                        for i in 0..d {
                            g[k * d + i] = 0.5 * dphi * col[i] / r;
                        }
                    }
                    if let Some(h) = hessian.as_deref_mut() {
                        // block: 1/2 [ (phi'' - phi'/r) u u^T + phi'/r I ]
                        for i in 0..d {
                            for j in 0..d {
                                let uij = col[i] * col[j] / (r * r);
                                let mut v = 0.5 * (ddphi - dphi / r) * uij;
                                if i == j {
                                    v += 0.5 * dphi / r;
                                }
                                h[(k * d + i) * n + (k * d + j)] = v;
                            }
                        }
                    }
                }
                Ok(PotentialJet { value, gradient, hessian })
            }
        }
    }

    /// Cauchy-Born density and derivatives at a deformation gradient.
    pub fn eval_cauchy_born(&self, f: &[f64], order: JetOrder) -> Result<CauchyBornJet> {
        let d = self.dim();
        let nk = self.stencil.len();
        debug_assert_eq!(f.len(), d * d);
        let a = self.bonds_of_gradient(f);
        let jet = self.eval_site(&a, order)?;

        let gradient = jet.gradient.as_ref().map(|g| {
            // (D W_cb)_{ij} = sum_rho g_{i rho} rho_j
            let mut out = vec![0.0; d * d];
            for k in 0..nk {
                let rho = self.stencil.offset(k);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] += g[k * d + i] * rho[j] as f64;
                    }
                }
            }
            out
        });
        let hessian = jet.hessian.as_ref().map(|h| {
            let n = d * nk;
            let m = d * d;
            let mut out = vec![0.0; m * m];
            for k in 0..nk {
                let rho = self.stencil.offset(k);
                for l in 0..nk {
                    let sig = self.stencil.offset(l);
                    for i in 0..d {
                        for q in 0..d {
                            let kk = h[(k * d + i) * n + (l * d + q)];
                            if kk == 0.0 {
                                continue;
                            }
                            for j in 0..d {
                                for r in 0..d {
                                    out[(i * d + j) * m + (q * d + r)] +=
                                        kk * rho[j] as f64 * sig[r] as f64;
                                }
                            }
                        }
                    }
                }
            }
            out
        });
        Ok(CauchyBornJet { value: jet.value, gradient, hessian })
    }

    /// The homogeneous bond matrix (F rho)_rho of a deformation gradient.
    pub fn bonds_of_gradient(&self, f: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let nk = self.stencil.len();
        let mut a = vec![0.0; d * nk];
        for k in 0..nk {
            let rho = self.stencil.offset(k);
            for i in 0..d {
                let mut s = 0.0;
                for j in 0..d {
                    s += f[i * d + j] * rho[j] as f64;
                }
                a[k * d + i] = s;
            }
        }
        a
    }
}

/// T(A)_rho = -A_{-rho}: point reflection composed with the natural
/// relabeling of the offsets.
pub fn point_reflection(stencil: &InteractionStencil, a: &[f64]) -> Vec<f64> {
    let d = stencil.dim();
    let nk = stencil.len();
    debug_assert_eq!(a.len(), d * nk);
    let mut out = vec![0.0; d * nk];
    for k in 0..nk {
        let kn = stencil.neg(k);
        for i in 0..d {
            out[k * d + i] = -a[kn * d + i];
        }
    }
    out
}

fn pair_jet(kind: PairKind, r: f64) -> (f64, f64, f64) {
    match kind {
        PairKind::LennardJones { well_depth, sigma } => {
            let s6 = (sigma / r).powi(6);
            let phi = 4.0 * well_depth * (s6 * s6 - s6);
            let dphi = 24.0 * well_depth * (s6 - 2.0 * s6 * s6) / r;
            let ddphi = 24.0 * well_depth * (26.0 * s6 * s6 - 7.0 * s6) / (r * r);
            (phi, dphi, ddphi)
        }
        PairKind::Morse { depth, stiffness, r_eq } => {
            let u = (-stiffness * (r - r_eq)).exp();
            let phi = depth * (u * u - 2.0 * u);
            let dphi = 2.0 * depth * stiffness * (u - u * u);
            let ddphi = 2.0 * depth * stiffness * stiffness * (2.0 * u * u - u);
            (phi, dphi, ddphi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nn1() -> Arc<InteractionStencil> {
        Arc::new(InteractionStencil::nearest(1))
    }

    fn nn2() -> Arc<InteractionStencil> {
        Arc::new(InteractionStencil::nearest(2))
    }

    fn lj_unit() -> PairKind {
        PairKind::LennardJones { well_depth: 1.0, sigma: 1.0 }
    }

    /// Central finite differences of the value; the step follows the cube
    /// root of machine epsilon times the argument scale.
    fn fd_gradient(p: &SitePotential, a: &[f64]) -> Vec<f64> {
        let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let h = (f64::EPSILON).cbrt() * scale;
        let mut g = vec![0.0; a.len()];
        let mut ap = a.to_vec();
        for i in 0..a.len() {
            ap[i] = a[i] + h;
            let vp = p.eval_site(&ap, JetOrder::Value).unwrap().value;
            ap[i] = a[i] - h;
            let vm = p.eval_site(&ap, JetOrder::Value).unwrap().value;
            ap[i] = a[i];
            g[i] = (vp - vm) / (2.0 * h);
        }
        g
    }

    fn fd_hessian(p: &SitePotential, a: &[f64]) -> Vec<f64> {
        let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let h = (f64::EPSILON).cbrt() * scale;
        let n = a.len();
        let mut out = vec![0.0; n * n];
        let mut ap = a.to_vec();
        for i in 0..n {
            ap[i] = a[i] + h;
            let gp = p.eval_site(&ap, JetOrder::Gradient).unwrap().gradient.unwrap();
            ap[i] = a[i] - h;
            let gm = p.eval_site(&ap, JetOrder::Gradient).unwrap().gradient.unwrap();
            ap[i] = a[i];
            for j in 0..n {
                out[i * n + j] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn harmonic_jet_is_quadratic_form() {
        let p = SitePotential::harmonic(nn2());
        let a = [0.5, -1.0, 2.0, 0.25, 1.5, -0.5, 0.0, 1.0];
        let jet = p.eval_site(&a, JetOrder::Hessian).unwrap();
        let want = 0.5 * a.iter().map(|v| v * v).sum::<f64>();
        assert!((jet.value - want).abs() < 1e-15);
        assert_eq!(jet.gradient.unwrap(), a.to_vec());
        let h = jet.hessian.unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(h[i * 8 + j], want);
            }
        }
    }

    #[test]
    fn lj_equilibrium_gradient_vanishes() {
        // standard LJ has phi'(2^{1/6}) = 0
        let p = SitePotential::new(nn1(), PotentialKind::Pair(lj_unit()), 0.3);
        let r = 2.0_f64.powf(1.0 / 6.0);
        let a = [r, -r];
        let g = p.eval_site(&a, JetOrder::Gradient).unwrap().gradient.unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn admissibility_floor_is_enforced() {
        let p = SitePotential::new(nn1(), PotentialKind::Pair(lj_unit()), 0.3);
        let err = p.eval_site(&[0.2, -1.0], JetOrder::Value).unwrap_err();
        match err {
            Error::OutsideAdmissibleSet { length, floor, .. } => {
                assert!((length - 0.2).abs() < 1e-15);
                assert_eq!(floor, 0.3);
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [
            PotentialKind::Harmonic,
            PotentialKind::Pair(lj_unit()),
            PotentialKind::Pair(PairKind::Morse { depth: 1.0, stiffness: 1.3, r_eq: 1.0 }),
        ] {
            let p = SitePotential::new(nn2(), kind, 0.3);
            let n = 2 * p.stencil().len();
            for _ in 0..100 {
                // random admissible bond matrix: unit bonds plus noise
                let mut a = p.bonds_of_gradient(&[1.0, 0.0, 0.0, 1.0]);
                for v in a.iter_mut() {
                    *v += 0.25 * (rng.gen::<f64>() - 0.5);
                }
                if p.admissibility_margin(&a) <= 0.05 {
                    continue;
                }
                let jet = p.eval_site(&a, JetOrder::Hessian).unwrap();
                let g = jet.gradient.unwrap();
                let h = jet.hessian.unwrap();
                let gfd = fd_gradient(&p, &a);
                let hfd = fd_hessian(&p, &a);
                let gs = g.iter().map(|v| v.abs()).fold(1e-9, f64::max);
                let hs = h.iter().map(|v| v.abs()).fold(1e-9, f64::max);
                for i in 0..n {
                    assert!((g[i] - gfd[i]).abs() <= 1e-6 * gs, "grad {i}");
                    for j in 0..n {
                        assert!((h[i * n + j] - hfd[i * n + j]).abs() <= 1e-6 * hs, "hess {i},{j}");
                    }
                }
                // Hessian symmetry
                for i in 0..n {
                    for j in 0..n {
                        assert!((h[i * n + j] - h[j * n + i]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn cauchy_born_1d_harmonic_closed_form() {
        // W_cb(A) = A^2, second derivative 2, for the nearest-neighbor
        // harmonic chain
        let p = SitePotential::harmonic(nn1());
        for a in [-1.5, -0.3, 0.0, 0.7, 2.0] {
            let jet = p.eval_cauchy_born(&[a], JetOrder::Hessian).unwrap();
            assert!((jet.value - a * a).abs() < 1e-14);
            assert!((jet.gradient.unwrap()[0] - 2.0 * a).abs() < 1e-14);
            assert!((jet.hessian.unwrap()[0] - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_born_hessian_matches_fd_of_gradient() {
        let p = SitePotential::new(nn2(), PotentialKind::Pair(lj_unit()), 0.3);
        let f0 = [1.05, 0.08, -0.04, 0.97];
        let jet = p.eval_cauchy_born(&f0, JetOrder::Hessian).unwrap();
        let c = jet.hessian.unwrap();
        let m = 4;
        let h = (f64::EPSILON).cbrt();
        let mut f = f0;
        for a in 0..m {
            f[a] = f0[a] + h;
            let gp = p.eval_cauchy_born(&f, JetOrder::Gradient).unwrap().gradient.unwrap();
            f[a] = f0[a] - h;
            let gm = p.eval_cauchy_born(&f, JetOrder::Gradient).unwrap().gradient.unwrap();
            f[a] = f0[a];
            for b in 0..m {
                let fd = (gp[b] - gm[b]) / (2.0 * h);
                let sc = c.iter().map(|v| v.abs()).fold(1.0, f64::max);
                assert!((c[b * m + a] - fd).abs() <= 1e-6 * sc, "({a},{b})");
            }
        }
    }

    #[test]
    fn point_reflection_examples() {
        let st = InteractionStencil::nearest(2);
        // identity-like matrix A_rho = rho is a fixed point
        let mut a = vec![0.0; 2 * st.len()];
        for (k, o) in st.offsets().iter().enumerate() {
            a[k * 2] = o[0] as f64;
            a[k * 2 + 1] = o[1] as f64;
        }
        assert_eq!(point_reflection(&st, &a), a);
    }

    proptest! {
        #[test]
        fn point_reflection_is_involution(vals in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let st = InteractionStencil::nearest(2);
            let back = point_reflection(&st, &point_reflection(&st, &vals));
            for (a, b) in back.iter().zip(&vals) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn t_symmetry_of_value_and_derivatives(vals in proptest::collection::vec(0.6f64..1.6, 4)) {
            // W(A) = W(T(A)) for pair kinds on admissible matrices, and
            // the reflected Hessian quadratic form agrees
            let st = nn2();
            let p = SitePotential::new(st.clone(), PotentialKind::Pair(lj_unit()), 0.3);
            let mut a = p.bonds_of_gradient(&[1.0, 0.0, 0.0, 1.0]);
            for (k, v) in vals.iter().enumerate() {
                a[k * 2] *= v;
                a[k * 2 + 1] += 0.1 * (v - 1.0);
            }
            prop_assume!(p.admissibility_margin(&a) > 0.05);
            let ta = point_reflection(&st, &a);
            let j1 = p.eval_site(&a, JetOrder::Value).unwrap();
            let j2 = p.eval_site(&ta, JetOrder::Value).unwrap();
            prop_assert!((j1.value - j2.value).abs() < 1e-12 * j1.value.abs().max(1.0));

            // derivative symmetry: D^2 W((B rho))[T(U),T(U)] = D^2 W((B rho))[U,U]
            let b = p.bonds_of_gradient(&[1.02, 0.05, -0.03, 0.98]);
            let h = p.eval_site(&b, JetOrder::Hessian).unwrap().hessian.unwrap();
            let n = 2 * st.len();
            let u: Vec<f64> = (0..n).map(|i| ((i * 13 + 5) as f64 * 0.41).sin()).collect();
            let tu = point_reflection(&st, &u);
            let quad = |v: &[f64]| -> f64 {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += v[i] * h[i * n + j] * v[j];
                    }
                }
                s
            };
            let (qa, qb) = (quad(&u), quad(&tu));
            prop_assert!((qa - qb).abs() <= 1e-10 * qa.abs().max(1.0));
        }
    }

    #[test]
    fn cauchy_born_zero_gradient_at_zero_harmonic() {
        let p = SitePotential::harmonic(nn2());
        let jet = p.eval_cauchy_born(&[0.0; 4], JetOrder::Gradient).unwrap();
        assert_eq!(jet.value, 0.0);
        assert!(jet.gradient.unwrap().iter().all(|&v| v == 0.0));
    }
}
