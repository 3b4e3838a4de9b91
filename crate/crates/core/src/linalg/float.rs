use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{max_abs, CMatrix, RankOracle};

/// Rank decisions by singular-value cutoff.
///
/// A singular value counts as zero when it is at most
/// `rel_tol * max(sigma_max, scale)`. `scale` keeps a matrix that is pure
/// rounding noise from being read as full rank.
#[derive(Clone, Copy, Debug)]
pub struct FloatOracle {
    pub rel_tol: f64,
    pub scale: f64,
    /// Relative residual accepted by [`RankOracle::solve`].
    pub solve_tol: f64,
}

impl FloatOracle {
    pub fn new(rel_tol: f64, scale: f64) -> Self {
        Self {
            rel_tol,
            scale,
            solve_tol: 1e-7,
        }
    }

    fn cutoff(&self, sigma_max: f64) -> f64 {
        self.rel_tol * sigma_max.max(self.scale)
    }
}

/// Full SVD of a matrix padded with zero rows up to square, so that the right
/// singular vectors span the whole domain.
fn padded_svd(a: &CMatrix) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let (m, n) = (a.nrows(), a.ncols());
    let rows = m.max(n);
    let mut padded = DMatrix::<Complex64>::zeros(rows, n);
    for i in 0..m {
        for j in 0..n {
            padded[(i, j)] = *a.get(i, j);
        }
    }
    let svd = padded.svd(true, true);
    let sv = svd.singular_values.iter().copied().collect();
    (sv, svd.u.expect("u requested"), svd.v_t.expect("v_t requested"))
}

impl RankOracle<Complex64> for FloatOracle {
    fn nullspace(&self, a: &CMatrix) -> Vec<Vec<Complex64>> {
        let n = a.ncols();
        if n == 0 {
            return Vec::new();
        }
        if a.nrows() == 0 {
            return (0..n)
                .map(|j| {
                    let mut v = vec![Complex64::new(0.0, 0.0); n];
                    v[j] = Complex64::new(1.0, 0.0);
                    v
                })
                .collect();
        }
        let (sv, _, v_t) = padded_svd(a);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let cut = self.cutoff(smax);
        sv.iter()
            .enumerate()
            .filter(|(_, &s)| s <= cut)
            .map(|(k, _)| (0..n).map(|j| v_t[(k, j)].conj()).collect())
            .collect()
    }

    fn solve(&self, a: &CMatrix, b: &[Complex64]) -> Option<Vec<Complex64>> {
        let (m, n) = (a.nrows(), a.ncols());
        assert_eq!(m, b.len());
        let bnorm = max_abs(b);
        if bnorm == 0.0 {
            return Some(vec![Complex64::new(0.0, 0.0); n]);
        }
        if n == 0 {
            return None;
        }
        let (sv, u, v_t) = padded_svd(a);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let cut = self.cutoff(smax);
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, &s) in sv.iter().enumerate() {
            if s <= cut {
                continue;
            }
            // coefficient u_k^* b / s
            let mut c = Complex64::new(0.0, 0.0);
            for i in 0..m {
                c += u[(i, k)].conj() * b[i];
            }
            c /= s;
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += v_t[(k, j)].conj() * c;
            }
        }
        let r = a.mul_vec(&x);
        let resid = r
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        (resid <= self.solve_tol * bnorm).then_some(x)
    }

    fn is_zero_vec(&self, v: &[Complex64], scale: f64) -> bool {
        max_abs(v) <= self.rel_tol * scale.max(self.scale)
    }

    fn normalizer(&self, v: &[Complex64]) -> Option<Complex64> {
        let max = max_abs(v);
        if max == 0.0 || !max.is_finite() {
            return None;
        }
        let first = v.iter().find(|z| z.norm() > 1e-9 * max)?;
        Some(first.conj() / first.norm() / max)
    }
}

/// Eigenvalues of a square complex matrix from its complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    assert!(a.is_square());
    if a.nrows() == 0 {
        return Vec::new();
    }
    let schur = nalgebra::Schur::new(a.to_nalgebra());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
pub fn lstsq(a: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let o = FloatOracle {
        rel_tol: 1e-13,
        scale: 0.0,
        solve_tol: f64::INFINITY,
    };
    o.solve(a, b)
        .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); a.ncols()])
}

/// Singular values, unordered.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.to_nalgebra().singular_values().iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let a = CMatrix::from_rows(&[vec![c(1.0), c(1.0), c(0.0)]]);
        let ns = FloatOracle::new(1e-10, 1.0).nullspace(&a);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(max_abs(&a.mul_vec(v)) < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_rotation_are_complex() {
        let a = CMatrix::from_rows(&[vec![c(0.0), c(-1.0)], vec![c(1.0), c(0.0)]]);
        let mut ev = eigenvalues(&a);
        ev.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn solve_rejects_out_of_range() {
        let a = CMatrix::from_rows(&[vec![c(1.0), c(0.0)], vec![c(0.0), c(0.0)]]);
        let o = FloatOracle::new(1e-10, 1.0);
        assert!(o.solve(&a, &[c(1.0), c(1.0)]).is_none());
        let x = o.solve(&a, &[c(2.0), c(0.0)]).unwrap();
        assert!((x[0] - c(2.0)).norm() < 1e-12);
    }
}
