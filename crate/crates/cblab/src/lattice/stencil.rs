//! Finite interaction ranges: symmetric, zero-free sets of integer
//! offsets whose integer span is the whole lattice.

use crate::{Error, Result};

/// The finite interaction range: an ordered list of offsets rho in
/// Z^d \ {0} with rho present iff -rho is present, spanning Z^d over the
/// integers.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionStencil {
    dim: usize,
    offsets: Vec<[i64; 3]>,
    neg_index: Vec<usize>,
    r_max: f64,
    r0: f64,
}

impl InteractionStencil {
    pub fn new(dim: usize, offsets: Vec<[i64; 3]>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        if offsets.is_empty() {
            return Err(Error::Config("stencil has no offsets".into()));
        }
        for o in &offsets {
            if o[..dim].iter().all(|&c| c == 0) {
                return Err(Error::Config("stencil contains the zero offset".into()));
            }
            if o[dim..].iter().any(|&c| c != 0) {
                return Err(Error::Config(format!(
                    "offset {o:?} has components beyond dimension {dim}"
                )));
            }
        }
        let mut neg_index = vec![usize::MAX; offsets.len()];
        for (i, o) in offsets.iter().enumerate() {
            let neg = [-o[0], -o[1], -o[2]];
            match offsets.iter().position(|p| *p == neg) {
                Some(j) => neg_index[i] = j,
                None => {
                    return Err(Error::Config(format!(
                        "stencil is not symmetric: missing -{o:?}"
                    )))
                }
            }
        }
        if offsets.len() != offsets.iter().collect::<std::collections::HashSet<_>>().len() {
            return Err(Error::Config("stencil has duplicate offsets".into()));
        }
        if !spans_lattice(dim, &offsets) {
            return Err(Error::Config(
                "stencil offsets do not span Z^d over the integers".into(),
            ));
        }
        let r_max = offsets
            .iter()
            .map(|o| ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt())
            .fold(0.0, f64::max);
        let r0 = r_max.max((dim as f64).sqrt() / 4.0);
        Ok(Self { dim, offsets, neg_index, r_max, r0 })
    }

    /// Nearest-neighbor range {+-e_i}.
    pub fn nearest(dim: usize) -> Self {
        let mut offsets = Vec::new();
        for i in 0..dim {
            let mut p = [0i64; 3];
            p[i] = 1;
            let mut m = [0i64; 3];
            m[i] = -1;
            offsets.push(p);
            offsets.push(m);
        }
        Self::new(dim, offsets).expect("nearest-neighbor stencil is valid")
    }

    /// Nearest plus next-nearest neighbors: {+-e_i} and, for d >= 2, the
    /// diagonal offsets +-e_i +- e_j; for d = 1 the second-neighbor pair
    /// {+-2}.
    pub fn next_nearest(dim: usize) -> Self {
        let mut offsets = Self::nearest(dim).offsets;
        if dim == 1 {
            offsets.push([2, 0, 0]);
            offsets.push([-2, 0, 0]);
        } else {
            for i in 0..dim {
                for j in i + 1..dim {
                    for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let mut o = [0i64; 3];
                        o[i] = si;
                        o[j] = sj;
                        offsets.push(o);
                    }
                }
            }
        }
        Self::new(dim, offsets).expect("next-nearest stencil is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[[i64; 3]] {
        &self.offsets
    }

    pub fn offset(&self, k: usize) -> [i64; 3] {
        self.offsets[k]
    }

    /// Index of -rho_k in the offset list.
    pub fn neg(&self, k: usize) -> usize {
        self.neg_index[k]
    }

    /// max |rho|
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// max(R_max, sqrt(d)/4): the interior-margin radius.
    pub fn r0(&self) -> f64 {
        self.r0
    }
}

/// The integer span of the offsets is all of Z^d iff the gcd of all d x d
/// minors of the offset matrix is 1.
fn spans_lattice(dim: usize, offsets: &[[i64; 3]]) -> bool {
    let n = offsets.len();
    if n < dim {
        return false;
    }
    let mut g: i64 = 0;
    let mut idx = vec![0usize; dim];
    // iterate over all dim-subsets of offsets
    fn rec(
        offsets: &[[i64; 3]],
        dim: usize,
        start: usize,
        depth: usize,
        idx: &mut Vec<usize>,
        g: &mut i64,
    ) {
        if depth == dim {
            let det = match dim {
                1 => offsets[idx[0]][0],
                2 => {
                    let (a, b) = (offsets[idx[0]], offsets[idx[1]]);
                    a[0] * b[1] - a[1] * b[0]
                }
                _ => {
                    let (a, b, c) = (offsets[idx[0]], offsets[idx[1]], offsets[idx[2]]);
                    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                        + a[2] * (b[0] * c[1] - b[1] * c[0])
                }
            };
            *g = gcd(*g, det.abs());
            return;
        }
        for i in start..offsets.len() {
            idx[depth] = i;
            rec(offsets, dim, i + 1, depth + 1, idx, g);
            if *g == 1 {
                return;
            }
        }
    }
    rec(offsets, dim, 0, 0, &mut idx, &mut g);
    g == 1
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_is_symmetric_and_spans() {
        for d in 1..=3 {
            let s = InteractionStencil::nearest(d);
            assert_eq!(s.len(), 2 * d);
            assert_eq!(s.r_max(), 1.0);
            assert_eq!(s.r0(), 1.0);
            for k in 0..s.len() {
                let o = s.offset(k);
                let n = s.offset(s.neg(k));
                assert_eq!([o[0] + n[0], o[1] + n[1], o[2] + n[2]], [0, 0, 0]);
            }
        }
    }

    #[test]
    fn rejects_zero_offset() {
        assert!(InteractionStencil::new(1, vec![[0, 0, 0]]).is_err());
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(InteractionStencil::new(1, vec![[1, 0, 0]]).is_err());
    }

    #[test]
    fn rejects_non_spanning() {
        // {+-2} generates 2Z, not Z
        assert!(InteractionStencil::new(1, vec![[2, 0, 0], [-2, 0, 0]]).is_err());
        // {+-(1,1)} generates a sublattice of Z^2
        assert!(InteractionStencil::new(2, vec![[1, 1, 0], [-1, -1, 0]]).is_err());
    }

    #[test]
    fn second_neighbor_chain_spans() {
        let s = InteractionStencil::new(1, vec![[1, 0, 0], [-1, 0, 0], [2, 0, 0], [-2, 0, 0]])
            .unwrap();
        assert_eq!(s.r_max(), 2.0);
    }

    #[test]
    fn diagonal_pair_spans_z2() {
        // {(1,1),(1,-1)} and negatives: dets are -2, sums don't reach odd
        // lattice points, gcd of minors is 2
        let s = InteractionStencil::new(
            2,
            vec![[1, 1, 0], [-1, -1, 0], [1, -1, 0], [-1, 1, 0]],
        );
        assert!(s.is_err());
        // adding e1 fixes it
        let s = InteractionStencil::new(
            2,
            vec![[1, 0, 0], [-1, 0, 0], [1, 1, 0], [-1, -1, 0]],
        );
        assert!(s.is_ok());
    }
}
