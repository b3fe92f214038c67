//! Small dense linear algebra: vector helpers and a cyclic Jacobi
//! eigensolver for symmetric matrices. Sizes here are tiny (acoustic
//! matrices are d x d, bond Hessians at most (d*|R|)^2), so simplicity and
//! determinism win over sophistication.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in ascending order and eigenvectors as
/// columns of a row-major n x n matrix. The input is row-major, only its
/// symmetric part is used.
pub fn sym_eigen(n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 1 {
        return (vec![m[0]], v);
    }

    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let scale0: f64 = m.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);

    for _sweep in 0..100 {
        if off(&m) <= 1e-14 * scale0 {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rows/cols p and q of m
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + newc] = v[r * n + oldc];
        }
    }
    (vals, vecs)
}

/// Smallest eigenvalue and eigenvector of a symmetric matrix.
pub fn sym_eig_min(n: usize, a: &[f64]) -> (f64, Vec<f64>) {
    let (vals, vecs) = sym_eigen(n, a);
    let mut v = vec![0.0; n];
    for r in 0..n {
        v[r] = vecs[r * n];
    }
    (vals[0], v)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eig_max(n: usize, a: &[f64]) -> f64 {
    let (vals, _) = sym_eigen(n, a);
    vals[n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal() {
        let a = [3.0, 0.0, 0.0, -1.0];
        let (vals, _) = sym_eigen(2, &a);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_known_2x2() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = [2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = sym_eigen(2, &a);
        assert!((vals[0] - 1.0).abs() < 1e-13);
        assert!((vals[1] - 3.0).abs() < 1e-13);
        // eigenvector for 1 is (1,-1)/sqrt(2)
        let r = vecs[0] / vecs[2];
        assert!((r + 1.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_reconstructs() {
        // A = V diag V^T for a fixed 4x4 symmetric matrix
        let a: Vec<f64> = vec![
            4.0, 1.0, -2.0, 0.5, //
            1.0, 3.0, 0.0, -1.0, //
            -2.0, 0.0, 5.0, 0.3, //
            0.5, -1.0, 0.3, 1.0,
        ];
        let n = 4;
        let (vals, vecs) = sym_eigen(n, &a);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += vecs[i * n + k] * vals[k] * vecs[j * n + k];
                }
                assert!((s - a[i * n + j]).abs() < 1e-11, "entry ({i},{j})");
            }
        }
    }
}
