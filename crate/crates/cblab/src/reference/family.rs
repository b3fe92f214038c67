//! Closed-form space-time deformations used to manufacture continuum
//! data. Each family is analytic on an enlarged box around the domain,
//! so evaluating it outside the domain plays the role of an extension
//! operator, and all derivatives needed by the pipeline (space order up
//! to 4, time order up to 2, mixed) are exact.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ReferenceFamily {
    /// y = A x + b + v t + w t^2 / 2
    AffinePoly {
        a: Vec<f64>,
        b: Vec<f64>,
        #[serde(default)]
        velocity: Vec<f64>,
        #[serde(default)]
        acceleration: Vec<f64>,
    },
    /// y = x + amplitude * sin(2 pi wave . x) * sin(omega t) * direction
    Sinusoid {
        amplitude: f64,
        wave: Vec<f64>,
        omega: f64,
        direction: Vec<f64>,
    },
    /// y = (A0 + (1 - cos(omega t))/2 * A1) x + b: a smooth loading ramp
    Ramp {
        a0: Vec<f64>,
        a1: Vec<f64>,
        b: Vec<f64>,
        omega: f64,
    },
}

/// An analytic deformation with exact derivative evaluators, defined on
/// the domain enlarged by a unit margin.
#[derive(Debug, Clone)]
pub struct SmoothReference {
    dim: usize,
    family: ReferenceFamily,
}

impl SmoothReference {
    pub fn new(dim: usize, family: ReferenceFamily) -> Result<Self> {
        let check_vec = |v: &Vec<f64>, name: &str, len: usize| -> Result<()> {
            if v.len() != len {
                return Err(Error::Config(format!(
                    "reference family field `{name}` must have length {len}"
                )));
            }
            Ok(())
        };
        match &family {
            ReferenceFamily::AffinePoly { a, b, velocity, acceleration } => {
                check_vec(a, "a", dim * dim)?;
                check_vec(b, "b", dim)?;
                if !velocity.is_empty() {
                    check_vec(velocity, "velocity", dim)?;
                }
                if !acceleration.is_empty() {
                    check_vec(acceleration, "acceleration", dim)?;
                }
            }
            ReferenceFamily::Sinusoid { wave, direction, .. } => {
                if wave.len() != dim {
                    return Err(Error::Config(format!("wave must have length {dim}")));
                }
                check_vec(direction, "direction", dim)?;
            }
            ReferenceFamily::Ramp { a0, a1, b, .. } => {
                check_vec(a0, "a0", dim * dim)?;
                check_vec(a1, "a1", dim * dim)?;
                check_vec(b, "b", dim)?;
            }
        }
        Ok(Self { dim, family })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &ReferenceFamily {
        &self.family
    }

    /// Mixed derivative d^alpha_x d^m_t y at (x, t); |alpha| <= 4, m <= 2.
    pub fn deriv(&self, x: &[f64; 3], t: f64, alpha: [usize; 3], m: usize) -> [f64; 3] {
        let d = self.dim;
        let ord: usize = alpha.iter().sum();
        debug_assert!(ord <= 4 && m <= 2);
        let mut out = [0.0; 3];
        match &self.family {
            ReferenceFamily::AffinePoly { a, b, velocity, acceleration } => {
                let v0 = |v: &Vec<f64>, i: usize| if v.is_empty() { 0.0 } else { v[i] };
                match (ord, m) {
                    (0, 0) => {
                        for i in 0..d {
                            let mut s = b[i] + v0(velocity, i) * t
                                + 0.5 * v0(acceleration, i) * t * t;
                            for j in 0..d {
                                s += a[i * d + j] * x[j];
                            }
                            out[i] = s;
                        }
                    }
                    (0, 1) => {
                        for i in 0..d {
                            out[i] = v0(velocity, i) + v0(acceleration, i) * t;
                        }
                    }
                    (0, 2) => {
                        for i in 0..d {
                            out[i] = v0(acceleration, i);
                        }
                    }
                    (1, 0) => {
                        let j = alpha.iter().position(|&a| a == 1).unwrap();
                        for i in 0..d {
                            out[i] = a[i * d + j];
                        }
                    }
                    _ => {}
                }
            }
            ReferenceFamily::Sinusoid { amplitude, wave, omega, direction } => {
                // identity part
                if m == 0 {
                    if ord == 0 {
                        out[..d].copy_from_slice(&x[..d]);
                    } else if ord == 1 {
                        let j = alpha.iter().position(|&a| a == 1).unwrap();
                        if j < d {
                            out[j] = 1.0;
                        }
                    }
                }
                // oscillatory part: amp * dir * S(x) * T(t)
                let mut coeff = amplitude * (2.0 * PI).powi(ord as i32);
                let mut phase_x = 0.0;
                for i in 0..d {
                    coeff *= wave[i].powi(alpha[i] as i32);
                    phase_x += 2.0 * PI * wave[i] * x[i];
                }
                let sx = (phase_x + ord as f64 * PI / 2.0).sin();
                let st = omega.powi(m as i32) * (omega * t + m as f64 * PI / 2.0).sin();
                for i in 0..d {
                    out[i] += coeff * direction[i] * sx * st;
                }
            }
            ReferenceFamily::Ramp { a0, a1, b, omega } => {
                // g(t) = (1 - cos(omega t))/2; g^(m) = -omega^m cos(omega t + m pi/2)/2
                let g = match m {
                    0 => 0.5 * (1.0 - (omega * t).cos()),
                    _ => -0.5 * omega.powi(m as i32) * (omega * t + m as f64 * PI / 2.0).cos(),
                };
                match ord {
                    0 => {
                        for i in 0..d {
                            let mut s = if m == 0 { b[i] } else { 0.0 };
                            for j in 0..d {
                                let base = if m == 0 { a0[i * d + j] } else { 0.0 };
                                s += (base + g * a1[i * d + j]) * x[j];
                            }
                            out[i] = s;
                        }
                    }
                    1 => {
                        let j = alpha.iter().position(|&a| a == 1).unwrap();
                        for i in 0..d {
                            let base = if m == 0 { a0[i * d + j] } else { 0.0 };
                            out[i] = base + g * a1[i * d + j];
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    pub fn value(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        self.deriv(x, t, [0; 3], 0)
    }

    pub fn velocity(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        self.deriv(x, t, [0; 3], 1)
    }

    pub fn acceleration_field(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        self.deriv(x, t, [0; 3], 2)
    }

    /// Deformation gradient, row-major d x d: entry (i, j) = d y_i / d x_j.
    pub fn space_gradient(&self, x: &[f64; 3], t: f64) -> Vec<f64> {
        let d = self.dim;
        let mut g = vec![0.0; d * d];
        for j in 0..d {
            let mut alpha = [0usize; 3];
            alpha[j] = 1;
            let col = self.deriv(x, t, alpha, 0);
            for i in 0..d {
                g[i * d + j] = col[i];
            }
        }
        g
    }

    /// Second space derivatives: entry (q, j, r) = d^2 y_q / dx_j dx_r at
    /// index (q*d + j)*d + r.
    pub fn space_hessian(&self, x: &[f64; 3], t: f64) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d * d];
        for j in 0..d {
            for r in j..d {
                let mut alpha = [0usize; 3];
                alpha[j] += 1;
                alpha[r] += 1;
                let v = self.deriv(x, t, alpha, 0);
                for q in 0..d {
                    h[(q * d + j) * d + r] = v[q];
                    h[(q * d + r) * d + j] = v[q];
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_time(r: &SmoothReference, x: &[f64; 3], t: f64, m: usize) -> [f64; 3] {
        // second differences lose half the mantissa; use a larger step
        let h = if m == 1 { 1e-5 } else { 1e-4 };
        let mut out = [0.0; 3];
        for i in 0..r.dim() {
            out[i] = match m {
                1 => (r.value(x, t + h)[i] - r.value(x, t - h)[i]) / (2.0 * h),
                _ => (r.value(x, t + h)[i] - 2.0 * r.value(x, t)[i] + r.value(x, t - h)[i])
                    / (h * h),
            };
        }
        out
    }

    fn fd_space(r: &SmoothReference, x: &[f64; 3], t: f64, j: usize) -> [f64; 3] {
        let h = 1e-6;
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let (vp, vm) = (r.value(&xp, t), r.value(&xm, t));
        let mut out = [0.0; 3];
        for i in 0..r.dim() {
            out[i] = (vp[i] - vm[i]) / (2.0 * h);
        }
        out
    }

    fn families() -> Vec<SmoothReference> {
        vec![
            SmoothReference::new(
                2,
                ReferenceFamily::AffinePoly {
                    a: vec![1.1, 0.2, -0.1, 0.9],
                    b: vec![0.3, -0.2],
                    velocity: vec![0.5, 0.1],
                    acceleration: vec![-0.2, 0.4],
                },
            )
            .unwrap(),
            SmoothReference::new(
                2,
                ReferenceFamily::Sinusoid {
                    amplitude: 0.05,
                    wave: vec![1.0, 2.0],
                    omega: 1.3,
                    direction: vec![1.0, -0.5],
                },
            )
            .unwrap(),
            SmoothReference::new(
                2,
                ReferenceFamily::Ramp {
                    a0: vec![1.0, 0.0, 0.0, 1.0],
                    a1: vec![-0.15, 0.02, 0.02, -0.1],
                    b: vec![0.0, 0.1],
                    omega: 2.0,
                },
            )
            .unwrap(),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for r in families() {
            for (x, t) in [([0.3, 0.7, 0.0], 0.4), ([-0.2, 1.1, 0.0], 1.2)] {
                // time derivatives
                for m in [1usize, 2] {
                    let a = r.deriv(&x, t, [0; 3], m);
                    let b = fd_time(&r, &x, t, m);
                    for i in 0..2 {
                        let tol = 1e-6 * a[i].abs().max(1.0);
                        assert!((a[i] - b[i]).abs() < tol, "m={m}: {a:?} vs {b:?}");
                    }
                }
                // space gradient
                let g = r.space_gradient(&x, t);
                for j in 0..2 {
                    let fd = fd_space(&r, &x, t, j);
                    for i in 0..2 {
                        let tol = 1e-6 * g[i * 2 + j].abs().max(1.0);
                        assert!((g[i * 2 + j] - fd[i]).abs() < tol);
                    }
                }
                // second space derivative of the sinusoid against FD of
                // the gradient
                let h = r.space_hessian(&x, t);
                let step = 1e-5;
                for j in 0..2 {
                    for rr in 0..2 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[rr] += step;
                        xm[rr] -= step;
                        let gp = r.space_gradient(&xp, t);
                        let gm = r.space_gradient(&xm, t);
                        for q in 0..2 {
                            let fd = (gp[q * 2 + j] - gm[q * 2 + j]) / (2.0 * step);
                            let v = h[(q * 2 + j) * 2 + rr];
                            assert!((v - fd).abs() < 1e-5 * v.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sinusoid_time_slice_values() {
        let r = SmoothReference::new(
            1,
            ReferenceFamily::Sinusoid {
                amplitude: 0.05,
                wave: vec![1.0],
                omega: 1.0,
                direction: vec![1.0],
            },
        )
        .unwrap();
        let x = [0.25, 0.0, 0.0];
        // y = x + 0.05 sin(2 pi x) sin(t)
        let want = 0.25 + 0.05 * (2.0 * PI * 0.25).sin() * 0.5_f64.sin();
        assert!((r.value(&x, 0.5)[0] - want).abs() < 1e-15);
        // initial displacement is zero, initial velocity is the sine profile
        assert!((r.value(&x, 0.0)[0] - 0.25).abs() < 1e-15);
        let v0 = r.velocity(&x, 0.0)[0];
        assert!((v0 - 0.05 * (2.0 * PI * 0.25).sin()).abs() < 1e-15);
    }
}
