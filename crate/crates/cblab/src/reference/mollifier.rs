//! Mollification of the analytic reference by the classical bump kernel
//! c * exp(-1/(1-|x|^2)) supported in the unit ball, scaled to radius
//! eps. The convolution is a tensor-product Gauss-Legendre quadrature
//! over the kernel support; the kernel is normalized against the same
//! quadrature grid, so constants are reproduced exactly and odd moments
//! vanish by the symmetry of nodes and kernel. Derivatives commute with
//! the convolution: differentiate the reference, then convolve.

use super::family::SmoothReference;
use crate::{Error, Result};

/// Kernel profile (unnormalized).
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Tensor-product quadrature of the scaled bump kernel.
#[derive(Debug, Clone)]
pub struct Mollifier {
    dim: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Kernel mass on this grid; divides every convolution.
    mass: f64,
}

impl Mollifier {
    pub fn new(dim: usize, order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        let mut m = Self { dim, order, nodes, weights, mass: 1.0 };
        m.mass = m.raw_mass();
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn raw_mass(&self) -> f64 {
        let mut mass = 0.0;
        self.for_each_node(|w, wt| {
            let r2: f64 = w.iter().take(self.dim).map(|v| v * v).sum();
            mass += wt * bump(r2);
        });
        mass
    }

    fn for_each_node(&self, mut f: impl FnMut(&[f64; 3], f64)) {
        let n = self.order;
        match self.dim {
            1 => {
                for i in 0..n {
                    f(&[self.nodes[i], 0.0, 0.0], self.weights[i]);
                }
            }
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        f(
                            &[self.nodes[i], self.nodes[j], 0.0],
                            self.weights[i] * self.weights[j],
                        );
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            f(
                                &[self.nodes[i], self.nodes[j], self.nodes[k]],
                                self.weights[i] * self.weights[j] * self.weights[k],
                            );
                        }
                    }
                }
            }
        }
    }

    /// (eta_eps * f)(x) = sum w_hat f(x - eps w) over the kernel grid.
    pub fn convolve(&self, eps: f64, x: &[f64; 3], f: impl Fn(&[f64; 3]) -> [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        self.for_each_node(|w, wt| {
            let r2: f64 = w.iter().take(self.dim).map(|v| v * v).sum();
            let k = bump(r2);
            if k == 0.0 {
                return;
            }
            let y = [x[0] - eps * w[0], x[1] - eps * w[1], x[2] - eps * w[2]];
            let v = f(&y);
            let c = wt * k;
            for i in 0..self.dim {
                out[i] += c * v[i];
            }
        });
        for o in out.iter_mut().take(self.dim) {
            *o /= self.mass;
        }
        out
    }
}

/// The mollified reference y_ref = eta_eps * y at one lattice spacing.
#[derive(Debug, Clone)]
pub struct MollifiedReference {
    reference: SmoothReference,
    mollifier: Mollifier,
    eps: f64,
}

impl MollifiedReference {
    pub fn new(reference: SmoothReference, eps: f64, order: usize) -> Self {
        let dim = reference.dim();
        Self { reference, mollifier: Mollifier::new(dim, order), eps }
    }

    pub fn reference(&self) -> &SmoothReference {
        &self.reference
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Mixed derivative of the mollified reference: derivatives commute
    /// with convolution, so the reference derivative is convolved.
    pub fn deriv(&self, x: &[f64; 3], t: f64, alpha: [usize; 3], m: usize) -> [f64; 3] {
        self.mollifier
            .convolve(self.eps, x, |y| self.reference.deriv(y, t, alpha, m))
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

    pub fn space_gradient(&self, x: &[f64; 3], t: f64) -> Vec<f64> {
        let d = self.reference.dim();
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

    /// Compare the value against a doubled-order quadrature at sample
    /// points; the declared order must keep the gap below 1e-8.
    pub fn self_test(&self, samples: &[([f64; 3], f64)]) -> Result<()> {
        let fine = Mollifier::new(self.reference.dim(), 2 * self.mollifier.order());
        let mut gap = 0.0f64;
        for (x, t) in samples {
            let a = self.value(x, *t);
            let b = fine.convolve(self.eps, x, |y| self.reference.value(y, *t));
            for i in 0..self.reference.dim() {
                gap = gap.max((a[i] - b[i]).abs());
            }
        }
        if gap > 1e-8 {
            return Err(Error::QuadratureOrderTooLow { order: self.mollifier.order(), gap });
        }
        Ok(())
    }
}

pub const DEFAULT_MOLLIFIER_ORDER: usize = 32;
