//! Two-sided linear difference equations with constant coefficients.
//!
//! An equation `u_0 y_n + … + u_r y_{n+r} = 0` has characteristic polynomial
//! `P(x) = Σ u_k x^k`. For a root `d` of multiplicity `m` the sequences
//! `k(k-1)…(k-j+1) d^k`, `j < m`, solve it on all of `ℤ`.

use std::ops::Range;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::linalg::{det, max_abs, powi, ExactOracle, FloatOracle, Mat, RankOracle, Scalar};
use crate::mask::MaskPolynomials;
use crate::poly::{self, Root};

/// Relative tolerance for root multiplicity clustering.
pub const ROOT_CLUSTER_TOL: f64 = 1e-7;
/// Singular value cutoff for the Sylvester-rank gcd.
pub const GCD_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum DiffeqError {
    #[error("equation has no nonzero coefficient")]
    ZeroEquation,
    #[error("root data contains a zero root")]
    ZeroRoot,
    #[error("root {0} listed twice")]
    RepeatedRoot(String),
    #[error("root multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("window of length {got} is shorter than the system index {index}")]
    WindowTooShort { got: usize, index: usize },
    #[error("data does not satisfy the system on its window (residual {0:.3e})")]
    NotASolution(f64),
    #[error("data is not in the span of the common solutions (residual {0:.3e})")]
    OutsideSpan(f64),
}

/// `u_0 y_n + … + u_r y_{n+r} = 0` with `u_0, u_r ≠ 0`.
#[derive(Clone, Debug)]
pub struct DifferenceEquation {
    coefficients: Vec<Complex64>,
    exact: Option<Vec<BigRational>>,
    nominal_order: usize,
}

impl DifferenceEquation {
    /// Trims zero coefficients at both ends. Leading zeros only shift the
    /// index, so the solution set is unchanged.
    pub fn new(u: &[Complex64]) -> Result<Self, DiffeqError> {
        let first = u.iter().position(|c| !c.is_zero()).ok_or(DiffeqError::ZeroEquation)?;
        let last = u.iter().rposition(|c| !c.is_zero()).unwrap();
        Ok(Self {
            coefficients: u[first..=last].to_vec(),
            exact: None,
            nominal_order: u.len().saturating_sub(1),
        })
    }

    pub fn new_exact(u: &[BigRational]) -> Result<Self, DiffeqError> {
        let first = u.iter().position(|c| !c.is_zero()).ok_or(DiffeqError::ZeroEquation)?;
        let last = u.iter().rposition(|c| !c.is_zero()).unwrap();
        let exact = u[first..=last].to_vec();
        Ok(Self {
            coefficients: exact.iter().map(Scalar::to_c64).collect(),
            exact: Some(exact),
            nominal_order: u.len().saturating_sub(1),
        })
    }

    /// Trimmed order `r`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn nominal_order(&self) -> usize {
        self.nominal_order
    }

    pub fn characteristic(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn characteristic_exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Roots of the characteristic polynomial with multiplicities.
    pub fn roots(&self) -> Vec<Root> {
        match &self.exact {
            Some(e) => poly::roots_exact(e),
            None => poly::roots_float(&self.coefficients, ROOT_CLUSTER_TOL),
        }
    }

    /// `max |Σ u_k y_{n+k}|` over every `n` with `n..=n+r` inside `window`.
    pub fn residual(&self, y: impl Fn(i64) -> Complex64, window: Range<i64>) -> f64 {
        let r = self.order() as i64;
        (window.start..window.end - r)
            .map(|n| {
                self.coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, u)| u * y(n + k as i64))
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Distinct nonzero roots `d_i` with multiplicities `r_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootData<S> {
    pairs: Vec<(S, usize)>,
}

impl<S: Scalar> RootData<S> {
    pub fn new(pairs: Vec<(S, usize)>) -> Result<Self, DiffeqError> {
        for (i, (d, r)) in pairs.iter().enumerate() {
            if d.is_zero() {
                return Err(DiffeqError::ZeroRoot);
            }
            if *r == 0 {
                return Err(DiffeqError::ZeroMultiplicity);
            }
            if pairs[..i].iter().any(|(e, _)| e == d) {
                return Err(DiffeqError::RepeatedRoot(format!("{}", d.to_c64())));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(S, usize)] {
        &self.pairs
    }

    /// Number of distinct roots.
    pub fn h(&self) -> usize {
        self.pairs.len()
    }

    /// Total multiplicity.
    pub fn r(&self) -> usize {
        self.pairs.iter().map(|p| p.1).sum()
    }
}

/// `k(k-1)…(k-j+1)` in the scalar type.
fn falling<S: Scalar>(k: i64, j: usize) -> S {
    (0..j as i64).fold(S::one(), |acc, m| acc * S::from_i64(k - m))
}

/// `0!! = 1`, `k!! = k!(k-1)!…1!`.
pub fn superfactorial<S: Scalar>(k: usize) -> S {
    let mut acc = S::one();
    let mut fact = S::one();
    for i in 1..=k {
        fact = fact * S::from_i64(i as i64);
        acc = acc * fact.clone();
    }
    acc
}

/// The `r` fundamental sequences attached to a root set.
///
/// Index `i` maps to the root `s(i)` and the weight degree `j(i)` by
/// `r_0 + … + r_{s-1} ≤ i < r_0 + … + r_s`, `j(i) = i - (r_0 + … + r_{s-1})`.
#[derive(Clone, Debug)]
pub struct FundamentalBasis<S> {
    roots: RootData<S>,
    map: Vec<(usize, usize)>,
}

impl<S: Scalar> FundamentalBasis<S> {
    pub fn new(roots: RootData<S>) -> Self {
        let map = roots
            .pairs
            .iter()
            .enumerate()
            .flat_map(|(s, &(_, r))| (0..r).map(move |j| (s, j)))
            .collect();
        Self { roots, map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn roots(&self) -> &RootData<S> {
        &self.roots
    }

    /// `(s(i), j(i))`.
    pub fn index(&self, i: usize) -> (usize, usize) {
        self.map[i]
    }

    /// `a_{ik} = k(k-1)…(k-j+1) d^k`, valid for every integer `k`.
    pub fn value(&self, i: usize, k: i64) -> S {
        let (s, j) = self.map[i];
        falling::<S>(k, j) * powi(&self.roots.pairs[s].0, k)
    }

    /// The two-sided formula with a sign factor:
    /// `sg(k) |k|!/(|k|-j)! d^k` for `|k| ≥ j`, zero otherwise, `sg(0) = 1`.
    /// Agrees with [`Self::value`] for `k ≥ 0`.
    pub fn literal(&self, i: usize, k: i64) -> S {
        let (s, j) = self.map[i];
        let a = k.unsigned_abs() as i64;
        if a < j as i64 {
            return S::zero();
        }
        let sign = if k < 0 { -S::one() } else { S::one() };
        sign * falling::<S>(a, j) * powi(&self.roots.pairs[s].0, k)
    }

    pub fn window(&self, i: usize, range: Range<i64>) -> Vec<S> {
        range.map(|k| self.value(i, k)).collect()
    }

    /// `A = [a_{ik}]`, rows `i`, columns `k` over `cols`.
    pub fn matrix(&self, cols: Range<i64>) -> Mat<S> {
        let ks: Vec<i64> = cols.collect();
        Mat::from_fn(self.len(), ks.len(), |i, c| self.value(i, ks[c]))
    }
}

/// Direct and closed-form values of `det A`, `A = [a_{ik}]_{i,k=0..r-1}`.
#[derive(Clone, Debug)]
pub struct DeterminantReport<S> {
    pub matrix: Mat<S>,
    pub direct: S,
    /// `Π_{l<s} (d_l - d_s)^{r_l + r_s} · Π (r_i - 1)!!`.
    pub as_printed: S,
    /// `Π_{l<s} (d_s - d_l)^{r_l r_s} · Π d_i^{r_i(r_i-1)/2} · Π (r_i - 1)!!`.
    pub confluent: S,
}

pub fn fundamental_determinant<S: Scalar>(roots: &RootData<S>) -> DeterminantReport<S> {
    let basis = FundamentalBasis::new(roots.clone());
    let r = basis.len() as i64;
    let matrix = basis.matrix(0..r);
    let direct = det(&matrix);
    let p = &roots.pairs;
    let mut as_printed = S::one();
    let mut confluent = S::one();
    for l in 0..p.len() {
        for s in l + 1..p.len() {
            let diff = p[l].0.clone() - p[s].0.clone();
            as_printed = as_printed * powi(&diff, (p[l].1 + p[s].1) as i64);
            confluent = confluent * powi(&(-diff), (p[l].1 * p[s].1) as i64);
        }
    }
    for (d, ri) in p {
        let sf = superfactorial::<S>(ri - 1);
        as_printed = as_printed * sf.clone();
        confluent = confluent * sf * powi(d, (ri * (ri - 1) / 2) as i64);
    }
    DeterminantReport {
        matrix,
        direct,
        as_printed,
        confluent,
    }
}

/// `Σ α_i a_i(k)` over a fundamental basis.
#[derive(Clone, Debug)]
pub struct SequenceRule<S> {
    pub basis: FundamentalBasis<S>,
    pub alpha: Vec<S>,
}

impl<S: Scalar> SequenceRule<S> {
    pub fn zero() -> Self {
        Self {
            basis: FundamentalBasis::new(RootData { pairs: Vec::new() }),
            alpha: Vec::new(),
        }
    }

    pub fn value(&self, k: i64) -> S {
        self.alpha
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (i, a)| acc + a.clone() * self.basis.value(i, k))
    }

    pub fn window(&self, range: Range<i64>) -> Vec<S> {
        range.map(|k| self.value(k)).collect()
    }
}

/// Monic gcd in floating point (Sylvester rank with cutoff [`GCD_TOL`]).
/// A zero argument is ignored; both zero gives the zero polynomial.
pub fn poly_gcd(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    poly::gcd_float(a, b, GCD_TOL)
}

/// Monic gcd by exact Euclid.
pub fn poly_gcd_exact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    poly::gcd_exact(a, b)
}

/// A system of difference equations sharing the unknown sequence.
#[derive(Clone, Debug)]
pub struct DifferenceSystem {
    pub equations: Vec<DifferenceEquation>,
    /// Union `D` of the characteristic roots, each with its largest
    /// multiplicity `r_d`.
    pub root_union: Vec<Root>,
    /// Index `t = Σ r_d`.
    pub index: usize,
    /// Monic gcd `p` of the characteristic polynomials.
    pub gcd: Vec<Complex64>,
    pub gcd_exact: Option<Vec<BigRational>>,
    pub gcd_roots: Vec<Root>,
}

impl DifferenceSystem {
    /// Uses exact arithmetic when every equation carries exact coefficients.
    pub fn new(equations: Vec<DifferenceEquation>) -> Self {
        let exact: Option<Vec<&[BigRational]>> =
            equations.iter().map(|e| e.characteristic_exact()).collect();
        let (gcd, gcd_exact, gcd_roots) = match exact {
            Some(ex) if !ex.is_empty() => {
                let g = ex
                    .iter()
                    .fold(Vec::new(), |acc: Vec<BigRational>, p| poly::gcd_exact(&acc, p));
                let roots = poly::roots_exact(&g);
                (poly::to_complex(&g), Some(g), roots)
            }
            _ => {
                let g = equations
                    .iter()
                    .fold(Vec::new(), |acc, e| poly_gcd(&acc, e.characteristic()));
                let roots = poly::roots_float(&g, ROOT_CLUSTER_TOL);
                (g, None, roots)
            }
        };
        let mut root_union: Vec<Root> = Vec::new();
        for root in equations.iter().flat_map(DifferenceEquation::roots) {
            match root_union.iter_mut().find(|u| same_root(u, &root)) {
                Some(u) => u.multiplicity = u.multiplicity.max(root.multiplicity),
                None => root_union.push(root),
            }
        }
        let index = root_union.iter().map(|r| r.multiplicity).sum();
        Self {
            equations,
            root_union,
            index,
            gcd,
            gcd_exact,
            gcd_roots,
        }
    }

    /// `ℓ = deg p`, the dimension of the common solution space.
    pub fn ell(&self) -> usize {
        self.gcd.len().saturating_sub(1)
    }

    /// Largest residual of `y` against every equation on `window`.
    pub fn residual(&self, y: impl Fn(i64) -> Complex64 + Copy, window: Range<i64>) -> f64 {
        self.equations
            .iter()
            .map(|e| e.residual(y, window.clone()))
            .fold(0.0, f64::max)
    }

    /// Exact basis when every root of `p` is rational.
    pub fn solution_basis_exact(&self) -> Option<FundamentalBasis<BigRational>> {
        let pairs: Option<Vec<_>> = self
            .gcd_roots
            .iter()
            .map(|r| r.exact.clone().map(|q| (q, r.multiplicity)))
            .collect();
        pairs.map(|p| FundamentalBasis::new(RootData { pairs: p }))
    }

    pub fn solution_basis(&self) -> FundamentalBasis<Complex64> {
        FundamentalBasis::new(RootData {
            pairs: self
                .gcd_roots
                .iter()
                .map(|r| (r.value, r.multiplicity))
                .collect(),
        })
    }
}

fn same_root(a: &Root, b: &Root) -> bool {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => x == y,
        (None, None) => {
            (a.value - b.value).norm() <= ROOT_CLUSTER_TOL * a.value.norm().max(b.value.norm()).max(1.0)
        }
        _ => false,
    }
}

/// The `ℓ` fundamental sequences spanning the common solution space.
pub fn solve_system(sys: &DifferenceSystem) -> FundamentalBasis<Complex64> {
    sys.solution_basis()
}

/// Extends data given on `0..z.len()` to a solution of the system on `ℤ`.
///
/// `z` must be at least `t` long and satisfy each equation wherever the
/// equation fits inside the window.
pub fn extend_finite_solution(
    z: &[Complex64],
    sys: &DifferenceSystem,
) -> Result<SequenceRule<Complex64>, DiffeqError> {
    check_window(z.len(), sys)?;
    let scale = max_abs(z);
    let resid = sys.residual(|k| z[k as usize], 0..z.len() as i64);
    if resid > 1e-9 * scale.max(1.0) {
        return Err(DiffeqError::NotASolution(resid));
    }
    if scale == 0.0 {
        return Ok(SequenceRule::zero());
    }
    let basis = sys.solution_basis();
    let a = basis.matrix(0..z.len() as i64).transpose();
    let oracle = FloatOracle {
        rel_tol: 1e-12,
        scale: 0.0,
        solve_tol: 1e-9,
    };
    match oracle.solve(&a, z) {
        Some(alpha) if !basis.is_empty() => Ok(SequenceRule { basis, alpha }),
        _ => Err(DiffeqError::OutsideSpan(fit_residual(&a, z))),
    }
}

fn fit_residual(a: &Mat<Complex64>, z: &[Complex64]) -> f64 {
    if a.ncols() == 0 {
        return max_abs(z);
    }
    let x = crate::linalg::lstsq(a, z);
    let r = a.mul_vec(&x);
    r.iter().zip(z).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Exact counterpart of [`extend_finite_solution`]; `None` when some root of
/// the gcd is irrational.
pub fn extend_finite_solution_exact(
    z: &[BigRational],
    sys: &DifferenceSystem,
) -> Option<Result<SequenceRule<BigRational>, DiffeqError>> {
    let basis = sys.solution_basis_exact()?;
    let exact_eqs: Option<Vec<&[BigRational]>> =
        sys.equations.iter().map(|e| e.characteristic_exact()).collect();
    let eqs = exact_eqs?;
    Some((|| {
        check_window(z.len(), sys)?;
        for u in &eqs {
            let r = u.len() - 1;
            for n in 0..(z.len() + 1).saturating_sub(u.len()) {
                let s: BigRational = (0..=r).map(|k| &u[k] * &z[n + k]).sum();
                if !s.is_zero() {
                    return Err(DiffeqError::NotASolution(crate::linalg::rational_to_f64(&s).abs()));
                }
            }
        }
        if z.iter().all(Zero::is_zero) {
            return Ok(SequenceRule::zero());
        }
        let a = basis.matrix(0..z.len() as i64).transpose();
        match ExactOracle.solve(&a, z) {
            Some(alpha) if !basis.is_empty() => Ok(SequenceRule { basis, alpha }),
            _ => Err(DiffeqError::OutsideSpan(f64::NAN)),
        }
    })())
}

fn check_window(len: usize, sys: &DifferenceSystem) -> Result<(), DiffeqError> {
    if len < sys.index {
        return Err(DiffeqError::WindowTooShort {
            got: len,
            index: sys.index,
        });
    }
    Ok(())
}

/// The system `Y L = 0` splits into two equations with characteristic
/// polynomials `p_e` and `p_o`. Zero polynomials are dropped.
pub fn mask_system(p: &MaskPolynomials) -> DifferenceSystem {
    let eqs = match &p.exact {
        Some((e, o)) => [e, o]
            .into_iter()
            .filter_map(|u| DifferenceEquation::new_exact(u).ok())
            .collect(),
        None => [&p.p_e, &p.p_o]
            .into_iter()
            .filter_map(|u| DifferenceEquation::new(u).ok())
            .collect(),
    };
    DifferenceSystem::new(eqs)
}

/// Degree of `gcd(p_e, p_o)` as used for `dim ker L`.
pub fn mask_gcd_degree(p: &MaskPolynomials) -> usize {
    mask_system(p).ell()
}

impl<S: Scalar> Default for SequenceRule<S> {
    fn default() -> Self {
        Self::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn simple_root_is_geometric() {
        let b = FundamentalBasis::new(RootData::new(vec![(q(3, 1), 1)]).unwrap());
        assert_eq!(b.value(0, 0), q(1, 1));
        assert_eq!(b.value(0, -2), q(1, 9));
        assert_eq!(b.value(0, 4), q(81, 1));
    }

    #[test]
    fn double_root_weight() {
        let b = FundamentalBasis::new(RootData::new(vec![(q(2, 1), 2)]).unwrap());
        assert_eq!(b.value(1, 0), q(0, 1));
        assert_eq!(b.value(1, 3), q(24, 1));
        assert_eq!(b.value(1, -1), q(-1, 2));
        assert_eq!(b.literal(1, -1), b.value(1, -1));
    }

    #[test]
    fn two_simple_roots() {
        let b = FundamentalBasis::new(RootData::new(vec![(q(2, 1), 1), (q(3, 1), 1)]).unwrap());
        assert_eq!(b.window(0, 0..3), vec![q(1, 1), q(2, 1), q(4, 1)]);
        assert_eq!(b.window(1, 0..3), vec![q(1, 1), q(3, 1), q(9, 1)]);
    }

    #[test]
    fn root_data_rejects_bad_input() {
        assert_eq!(RootData::new(vec![(q(0, 1), 1)]), Err(DiffeqError::ZeroRoot));
        assert!(matches!(
            RootData::new(vec![(q(2, 1), 1), (q(2, 1), 2)]),
            Err(DiffeqError::RepeatedRoot(_))
        ));
    }

    #[test]
    fn determinant_small_cases() {
        let one = fundamental_determinant(&RootData::new(vec![(q(5, 1), 1)]).unwrap());
        assert_eq!(one.direct, q(1, 1));
        assert_eq!(one.as_printed, q(1, 1));

        let two = fundamental_determinant(&RootData::new(vec![(q(2, 1), 1), (q(3, 1), 1)]).unwrap());
        assert_eq!(two.direct, q(1, 1));
        assert_eq!(two.as_printed, q(1, 1));
        assert_eq!(two.confluent, q(1, 1));

        let double = fundamental_determinant(&RootData::new(vec![(q(7, 1), 2)]).unwrap());
        assert_eq!(double.matrix.rows_vec(), vec![vec![q(1, 1), q(7, 1)], vec![q(0, 1), q(7, 1)]]);
        assert_eq!(double.direct, q(7, 1));
        assert_eq!(double.confluent, q(7, 1));
    }

    #[test]
    fn printed_form_misses_simple_roots_two_apart() {
        // Vandermonde value is d_2 - d_1 = 2; the printed closed form squares it.
        let r = fundamental_determinant(&RootData::new(vec![(q(2, 1), 1), (q(4, 1), 1)]).unwrap());
        assert_eq!(r.direct, q(2, 1));
        assert_eq!(r.confluent, q(2, 1));
        assert_eq!(r.as_printed, q(4, 1));
    }

    #[test]
    fn literal_formula_fails_for_triple_root() {
        // (x - 2)^3 = x^3 - 6x^2 + 12x - 8
        let eq = DifferenceEquation::new(&[c(-8.0), c(12.0), c(-6.0), c(1.0)]).unwrap();
        let b = FundamentalBasis::new(RootData::new(vec![(c(2.0), 3)]).unwrap());
        let lit = eq.residual(|k| b.literal(2, k), -6..6);
        let ff = eq.residual(|k| b.value(2, k), -6..6);
        assert!(lit > 1e-3);
        assert!(ff < 1e-9);
    }

    #[test]
    fn gcd_examples() {
        let g = poly_gcd(&[c(1.0), c(1.0)], &[c(1.0), c(1.0)]);
        assert!((g[0] - c(1.0)).norm() < 1e-12 && (g[1] - c(1.0)).norm() < 1e-12);
        assert_eq!(poly_gcd_exact(&[q(1, 4), q(3, 4)], &[q(3, 4), q(1, 4)]), vec![q(1, 1)]);
        assert_eq!(
            poly_gcd_exact(&[q(-1, 1), q(0, 1), q(1, 1)], &[q(0, 1), q(1, 1), q(1, 1)]),
            vec![q(1, 1), q(1, 1)]
        );
    }

    #[test]
    fn coprime_system_has_no_solutions() {
        let sys = DifferenceSystem::new(vec![
            DifferenceEquation::new_exact(&[q(-2, 1), q(1, 1)]).unwrap(),
            DifferenceEquation::new_exact(&[q(-3, 1), q(1, 1)]).unwrap(),
        ]);
        assert_eq!(sys.ell(), 0);
        assert!(solve_system(&sys).is_empty());
        assert_eq!(sys.index, 2);
    }

    #[test]
    fn single_equation_full_basis() {
        let sys = DifferenceSystem::new(vec![DifferenceEquation::new(&[c(6.0), c(-5.0), c(1.0)]).unwrap()]);
        assert_eq!(sys.ell(), 2);
        let b = solve_system(&sys);
        for i in 0..b.len() {
            assert!(sys.residual(|k| b.value(i, k), -20..21) < 1e-9 * 3f64.powi(20));
        }
    }

    #[test]
    fn dependent_mask_system() {
        let m = crate::mask::Mask::from_ratios(&[(1, 2), (1, 2), (1, 2), (1, 2)]).unwrap();
        let sys = mask_system(&m.polynomials());
        assert_eq!(sys.ell(), 1);
        assert_eq!(sys.gcd_exact, Some(vec![q(1, 1), q(1, 1)]));
        let b = sys.solution_basis_exact().unwrap();
        assert_eq!(b.window(0, -2..2), vec![q(1, 1), q(-1, 1), q(1, 1), q(-1, 1)]);
        let y = extend_finite_solution_exact(&[q(1, 1), q(-1, 1)], &sys).unwrap().unwrap();
        assert_eq!(y.value(5), q(-1, 1));
        assert_eq!(y.value(-4), q(1, 1));
    }

    #[test]
    fn geometric_extension() {
        let sys = DifferenceSystem::new(vec![DifferenceEquation::new(&[c(-2.0), c(1.0)]).unwrap()]);
        let y = extend_finite_solution(&[c(1.0), c(2.0)], &sys).unwrap();
        assert!((y.value(10) - c(1024.0)).norm() < 1e-9);
        assert!((y.value(-3) - c(0.125)).norm() < 1e-14);
    }

    #[test]
    fn extension_rejects_non_solutions() {
        let sys = DifferenceSystem::new(vec![DifferenceEquation::new(&[c(-2.0), c(1.0)]).unwrap()]);
        assert!(matches!(
            extend_finite_solution(&[c(1.0), c(3.0)], &sys),
            Err(DiffeqError::NotASolution(_))
        ));
        let coprime = DifferenceSystem::new(vec![
            DifferenceEquation::new(&[c(-2.0), c(1.0)]).unwrap(),
            DifferenceEquation::new(&[c(-3.0), c(1.0)]).unwrap(),
        ]);
        assert!(matches!(
            extend_finite_solution(&[c(1.0), c(0.0)], &coprime),
            Err(DiffeqError::NotASolution(_)) | Err(DiffeqError::OutsideSpan(_))
        ));
        assert!(matches!(
            extend_finite_solution(&[c(1.0)], &coprime),
            Err(DiffeqError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn zero_window_extends_to_zero() {
        let sys = DifferenceSystem::new(vec![DifferenceEquation::new(&[c(6.0), c(-5.0), c(1.0)]).unwrap()]);
        let y = extend_finite_solution(&[c(0.0), c(0.0)], &sys).unwrap();
        assert!(y.window(-20..20).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn trims_both_ends() {
        let e = DifferenceEquation::new(&[c(0.0), c(1.0), c(2.0), c(0.0)]).unwrap();
        assert_eq!(e.order(), 1);
        assert_eq!(e.nominal_order(), 3);
        assert!(DifferenceEquation::new(&[c(0.0)]).is_err());
    }

    fn arb_roots() -> impl Strategy<Value = Vec<Complex64>> {
        (1usize..=5).prop_flat_map(|h| {
            proptest::collection::vec((0.3f64..2.0, 0.0f64..std::f64::consts::TAU), h)
                .prop_map(|v| v.into_iter().map(|(r, t)| Complex64::from_polar(r, t)).collect::<Vec<_>>())
                .prop_filter("separated roots", |v: &Vec<Complex64>| {
                    v.iter().enumerate().all(|(i, a)| v[..i].iter().all(|b| (a - b).norm() >= 0.1))
                })
        })
    }

    proptest! {
        #[test]
        fn confluent_formula_matches_direct(roots in arb_roots(), mults in proptest::collection::vec(1usize..=3, 5)) {
            let pairs: Vec<_> = roots.iter().zip(&mults).map(|(d, m)| (*d, *m)).collect();
            let rep = fundamental_determinant(&RootData::new(pairs).unwrap());
            // elimination error scales with the Hadamard bound, not with |det|
            let hadamard: f64 = rep
                .matrix
                .rows_vec()
                .iter()
                .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .product();
            let tol = 1e-8 * rep.confluent.norm() + 1e-12 * hadamard;
            prop_assert!((rep.direct - rep.confluent).norm() <= tol);
        }

        #[test]
        fn fundamental_sequences_solve_their_equation(roots in arb_roots(), mults in proptest::collection::vec(1usize..=3, 5)) {
            let pairs: Vec<_> = roots.iter().zip(&mults).map(|(d, m)| (*d, *m)).collect();
            // characteristic polynomial Π (x - d)^m
            let mut p = vec![c(1.0)];
            for (d, m) in &pairs {
                for _ in 0..*m {
                    let mut next = vec![Complex64::zero(); p.len() + 1];
                    for (k, a) in p.iter().enumerate() {
                        next[k + 1] += a;
                        next[k] -= a * d;
                    }
                    p = next;
                }
            }
            let eq = DifferenceEquation::new(&p).unwrap();
            let basis = FundamentalBasis::new(RootData::new(pairs).unwrap());
            for i in 0..basis.len() {
                let w = basis.window(i, -20..21);
                let scale = max_abs(&w);
                let res = eq.residual(|k| basis.value(i, k), -20..21);
                let coef = p.iter().map(|z| z.norm()).sum::<f64>();
                prop_assert!(res <= 1e-9 * scale * coef.max(1.0));
            }
        }

        #[test]
        fn extension_restricts_to_window(roots in arb_roots(), alpha in proptest::collection::vec(-1.0f64..1.0, 5)) {
            let pairs: Vec<_> = roots.iter().map(|d| (*d, 1)).collect();
            let h = pairs.len();
            let mut p = vec![c(1.0)];
            for (d, _) in &pairs {
                let mut next = vec![Complex64::zero(); p.len() + 1];
                for (k, a) in p.iter().enumerate() {
                    next[k + 1] += a;
                    next[k] -= a * d;
                }
                p = next;
            }
            let sys = DifferenceSystem::new(vec![DifferenceEquation::new(&p).unwrap()]);
            let basis = FundamentalBasis::new(RootData::new(pairs).unwrap());
            let z: Vec<Complex64> = (0..sys.index as i64)
                .map(|k| (0..h).map(|i| c(alpha[i]) * basis.value(i, k)).sum())
                .collect();
            let y = extend_finite_solution(&z, &sys).unwrap();
            let back = y.window(0..z.len() as i64);
            let scale = max_abs(&z).max(1e-12);
            for (a, b) in back.iter().zip(&z) {
                prop_assert!((a - b).norm() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}
