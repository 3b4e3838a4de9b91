//! Dyadic evaluation of `φ` by the cascade recursion, and the homogeneous
//! functions `h = Σ_k Y_k φ(· + k)` built from the rows of `B`.
//!
//! Values at a dyadic point are the ones the cascade produces from the
//! integer values; `φ` vanishes outside `[0, N]`.

use std::ops::Range;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::extension::{eigen_extend, ExtensionError, SequenceWindow};
use crate::linalg::{max_abs, singular_values, CMatrix, ExactOracle, FloatOracle, RankOracle, Scalar};
use crate::mask::Mask;
use crate::spectral::{SpectralData, RANK_TOL};

pub const DEFAULT_LEVEL: u32 = 12;
pub const MAX_LEVEL: u32 = 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("1 is not an eigenvalue of T (accuracy 0); dyadic evaluation unavailable")]
    NotAnEigenvalue,
    #[error("the 1-eigenvector {vector:?} sums to zero; cannot normalize")]
    ZeroSum { vector: Vec<Complex64> },
    #[error("eigenvalue 1 of T is not simple; candidate integer values {candidates:?}")]
    Ambiguous { candidates: Vec<Vec<Complex64>> },
    #[error("level {level} exceeds the maximum {max}")]
    LevelTooHigh { level: u32, max: u32 },
    #[error("point needs level {needed}, grid has {available}")]
    LevelBudget { needed: u32, available: u32 },
    #[error("point {x} is outside the sampled interval")]
    OutsideGrid { x: f64 },
    #[error("bad interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("translate window {got:?} does not cover {needed:?}")]
    WindowTooSmall { needed: Range<i64>, got: Range<i64> },
    #[error("B is singular")]
    SingularBasis,
    #[error(transparent)]
    Extension(#[from] ExtensionError),
}

/// The dyadic rational `m / 2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    pub m: i64,
    pub j: u32,
}

impl Dyadic {
    pub fn new(m: i64, j: u32) -> Self {
        Self { m, j }
    }

    pub fn to_f64(self) -> f64 {
        self.m as f64 / (1u64 << self.j) as f64
    }

    /// Numerator over `2^level`, if representable there.
    pub fn at_level(self, level: u32) -> Option<i64> {
        if self.j <= level {
            Some(self.m << (level - self.j))
        } else if self.m % (1i64 << (self.j - level)) == 0 {
            Some(self.m >> (self.j - level))
        } else {
            None
        }
    }

    /// `2^{-k} x`.
    pub fn scaled_down(self, k: u32) -> Self {
        Self::new(self.m, self.j + k)
    }
}

/// Values at `m / 2^level` for `m ∈ start..start+len`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicGrid {
    pub level: u32,
    pub start: i64,
    pub values: Vec<Complex64>,
}

impl DyadicGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> Range<i64> {
        self.start..self.start + self.values.len() as i64
    }

    pub fn point(&self, i: usize) -> Dyadic {
        Dyadic::new(self.start + i as i64, self.level)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.point(i).to_f64()
    }

    pub fn get(&self, d: Dyadic) -> Result<Complex64, EvalError> {
        let m = d.at_level(self.level).ok_or(EvalError::LevelBudget {
            needed: d.j,
            available: self.level,
        })?;
        if !self.indices().contains(&m) {
            return Err(EvalError::OutsideGrid { x: d.to_f64() });
        }
        Ok(self.values[(m - self.start) as usize])
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// Grid points `m` with `a ≤ m / 2^level ≤ b`.
    pub fn span(a: f64, b: f64, level: u32) -> Result<Range<i64>, EvalError> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(EvalError::BadInterval(a, b));
        }
        let s = (1u64 << level) as f64;
        Ok((a * s).ceil() as i64..(b * s).floor() as i64 + 1)
    }
}

/// `φ` on `[0, N]` at every level up to the requested one.
#[derive(Clone, Debug)]
pub struct RefinableEvaluation {
    pub mask: Mask,
    /// `(φ(0), …, φ(N))`, summing to 1.
    pub integer_values: Vec<Complex64>,
    pub exact_integer_values: Option<Vec<BigRational>>,
    /// `levels[j]` holds `φ(m / 2^j)` for `m = 0..=N 2^j`.
    pub levels: Vec<DyadicGrid>,
}

impl RefinableEvaluation {
    pub fn level(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn finest(&self) -> &DyadicGrid {
        self.levels.last().expect("level 0 always present")
    }

    /// `φ(m / 2^level)` on the finest grid, zero off the support.
    pub fn phi_index(&self, m: i64) -> Complex64 {
        let g = self.finest();
        if g.indices().contains(&m) {
            g.values[m as usize]
        } else {
            Complex64::zero()
        }
    }

    pub fn phi(&self, d: Dyadic) -> Result<Complex64, EvalError> {
        let level = self.level();
        let m = d.at_level(level).ok_or(EvalError::LevelBudget {
            needed: d.j,
            available: level,
        })?;
        Ok(self.phi_index(m))
    }

    /// `φ⁰(x) = (φ(x), φ(x+1), …, φ(x+N))`.
    pub fn phi0(&self, d: Dyadic) -> Result<Vec<Complex64>, EvalError> {
        let level = self.level();
        let m = d.at_level(level).ok_or(EvalError::LevelBudget {
            needed: d.j,
            available: level,
        })?;
        let step = 1i64 << level;
        Ok((0..=self.mask.n() as i64).map(|k| self.phi_index(m + k * step)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.finest().max_abs()
    }
}

/// From a basis of the 1-eigenspace, the unique direction, possibly after
/// imposing `φ(N) = 0`.
fn pick_integer_values<S: Scalar>(mut basis: Vec<Vec<S>>) -> Result<Vec<S>, Vec<Vec<S>>> {
    if basis.len() > 1 {
        let n = basis[0].len() - 1;
        let pivot = (0..basis.len()).max_by(|&a, &b| {
            basis[a][n]
                .magnitude()
                .partial_cmp(&basis[b][n].magnitude())
                .unwrap()
        });
        let p = pivot.unwrap();
        if basis[p][n].is_zero() {
            return Err(basis);
        }
        let pv = basis.remove(p);
        let reduced: Vec<Vec<S>> = basis
            .iter()
            .map(|v| {
                let f = v[n].clone() / pv[n].clone();
                v.iter().zip(&pv).map(|(a, b)| a.clone() - f.clone() * b.clone()).collect()
            })
            .collect();
        if reduced.len() != 1 {
            return Err(reduced);
        }
        basis = reduced;
    }
    Ok(basis.pop().unwrap())
}

fn integer_values(m: &Mask) -> Result<(Vec<Complex64>, Option<Vec<BigRational>>), EvalError> {
    let s = m.scale_matrices();
    if let Some(t) = s.exact_t() {
        let ns = ExactOracle.nullspace(&t.shifted(&BigRational::one()));
        if ns.is_empty() {
            return Err(EvalError::NotAnEigenvalue);
        }
        let v = pick_integer_values(ns).map_err(|c| EvalError::Ambiguous {
            candidates: c.iter().map(|v| v.iter().map(Scalar::to_c64).collect()).collect(),
        })?;
        let sum = v.iter().fold(BigRational::zero(), |a, b| a + b);
        if sum.is_zero() {
            return Err(EvalError::ZeroSum {
                vector: v.iter().map(Scalar::to_c64).collect(),
            });
        }
        let v: Vec<BigRational> = v.iter().map(|x| x / &sum).collect();
        return Ok((v.iter().map(Scalar::to_c64).collect(), Some(v)));
    }
    let t = s.t();
    let oracle = FloatOracle::new(RANK_TOL, t.norm_inf().max(1.0));
    let ns = oracle.nullspace(&t.shifted(&Complex64::one()));
    if ns.is_empty() {
        return Err(EvalError::NotAnEigenvalue);
    }
    let v = pick_integer_values(ns).map_err(|candidates| EvalError::Ambiguous { candidates })?;
    let sum: Complex64 = v.iter().sum();
    if sum.norm() <= 1e-12 * max_abs(&v) {
        return Err(EvalError::ZeroSum { vector: v });
    }
    Ok((v.iter().map(|x| x / sum).collect(), None))
}

/// Cascade evaluation of `φ` up to `level`.
pub fn evaluate_phi(m: &Mask, level: u32) -> Result<RefinableEvaluation, EvalError> {
    if level > MAX_LEVEL {
        return Err(EvalError::LevelTooHigh { level, max: MAX_LEVEL });
    }
    let (ints, exact) = integer_values(m)?;
    let c = m.coefficients();
    let n = m.n() as i64;
    let mut levels = vec![DyadicGrid {
        level: 0,
        start: 0,
        values: ints.clone(),
    }];
    for j in 0..level {
        let old = &levels[j as usize].values;
        let step = 1i64 << j;
        let len = n * (step << 1) + 1;
        let values: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|mi| {
                if mi % 2 == 0 {
                    return old[(mi / 2) as usize];
                }
                c.iter()
                    .enumerate()
                    .filter_map(|(k, ck)| {
                        let idx = mi - k as i64 * step;
                        (0..old.len() as i64).contains(&idx).then(|| ck * old[idx as usize])
                    })
                    .sum()
            })
            .collect();
        levels.push(DyadicGrid {
            level: j + 1,
            start: 0,
            values,
        });
    }
    Ok(RefinableEvaluation {
        mask: m.clone(),
        integer_values: ints,
        exact_integer_values: exact,
        levels,
    })
}

/// A `(2, λ, r)`-homogeneous function sampled on a dyadic grid.
#[derive(Clone, Debug)]
pub struct HomogeneousFunction {
    pub lambda: Complex64,
    pub order: usize,
    /// `Y^0`, the row of `B`.
    pub row: Vec<Complex64>,
    /// `None` for `λ = 0`, where no extension exists.
    pub y: Option<SequenceWindow>,
    pub samples: DyadicGrid,
    pub basis_row: Option<usize>,
}

impl HomogeneousFunction {
    pub fn extendable(&self) -> bool {
        self.y.is_some()
    }

    pub fn value(&self, d: Dyadic) -> Result<Complex64, EvalError> {
        self.samples.get(d)
    }
}

/// `Σ_k Y_k φ(x + k)` on the grid points `ms` at the evaluation's level.
fn sample_sequence(eval: &RefinableEvaluation, y: &SequenceWindow, ms: Range<i64>) -> Result<DyadicGrid, EvalError> {
    let level = eval.level();
    let step = 1i64 << level;
    let n = eval.mask.n() as i64;
    if ms.is_empty() {
        return Ok(DyadicGrid {
            level,
            start: ms.start,
            values: Vec::new(),
        });
    }
    // x + k ∈ [0, N]
    let k_lo = -(ms.end - 1).div_euclid(step);
    let k_hi = n - ms.start.div_euclid(step);
    let yk = y.window(k_lo..k_hi + 1)?;
    let values = ms
        .clone()
        .into_par_iter()
        .map(|m| {
            (k_lo..=k_hi)
                .map(|k| eval.phi_index(m + k * step) * yk[(k - k_lo) as usize])
                .sum()
        })
        .collect();
    Ok(DyadicGrid {
        level,
        start: ms.start,
        values,
    })
}

/// `v · φ⁰(x)` on the grid points `ms`.
fn sample_row(eval: &RefinableEvaluation, v: &[Complex64], ms: Range<i64>) -> DyadicGrid {
    let level = eval.level();
    let step = 1i64 << level;
    let values = ms
        .clone()
        .into_par_iter()
        .map(|m| v.iter().enumerate().map(|(k, vk)| vk * eval.phi_index(m + k as i64 * step)).sum())
        .collect();
    DyadicGrid {
        level,
        start: ms.start,
        values,
    }
}

/// `|λ|` below this (relative to `‖T‖`) counts as the eigenvalue 0.
const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

/// One homogeneous function per row of `B`, sampled on `[a, b]`.
///
/// Rows with `λ = 0` have no extension; they are sampled as `v · φ⁰(x)` on
/// the part of the interval inside `[-1, 1]`.
pub fn build_homogeneous_basis(
    eval: &RefinableEvaluation,
    spec: &SpectralData,
    interval: (f64, f64),
) -> Result<Vec<HomogeneousFunction>, EvalError> {
    let mask = &eval.mask;
    let level = eval.level();
    let ms = DyadicGrid::span(interval.0, interval.1, level)?;
    let tnorm = mask.scale_matrices().t().norm_inf().max(1.0);
    let rows = spec.b.nrows();
    let mut ys: Vec<Option<SequenceWindow>> = vec![None; rows];
    // predecessors first
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by_key(|&i| spec.rows[i].position);
    for &i in &order {
        let info = &spec.rows[i];
        let zero = match &spec.groups[info.group].exact {
            Some(q) => q.is_zero(),
            None => info.lambda.norm() <= ZERO_EIGENVALUE_TOL * tnorm,
        };
        if zero {
            continue;
        }
        let prev = match spec.predecessor(i) {
            Some(p) => match &ys[p] {
                Some(y) => Some(y),
                None => continue,
            },
            None => None,
        };
        ys[i] = Some(eigen_extend(spec.b.row(i), prev, mask, info.lambda, 0..mask.n() as i64 + 1)?);
    }
    let unit = 1i64 << level;
    let inner = ms.start.max(-unit)..ms.end.min(unit + 1);
    ys.into_iter()
        .enumerate()
        .map(|(i, y)| {
            let row = spec.b.row(i).to_vec();
            let samples = match &y {
                Some(y) => sample_sequence(eval, y, ms.clone())?,
                None => sample_row(eval, &row, inner.clone()),
            };
            Ok(HomogeneousFunction {
                lambda: spec.rows[i].lambda,
                order: spec.rows[i].position,
                row,
                y,
                samples,
                basis_row: Some(i),
            })
        })
        .collect()
}

/// Points of `h`'s grid that stay on the grid after `r` halvings.
pub fn test_points(h: &HomogeneousFunction, r: u32) -> Vec<Dyadic> {
    let g = &h.samples;
    if g.level < r {
        return Vec::new();
    }
    let coarse = g.level - r;
    let f = 1i64 << r;
    g.indices()
        .filter(|m| m % f == 0)
        .map(|m| Dyadic::new(m / f, coarse))
        .collect()
}

/// `max_x |Σ_{k=0}^r C(r,k) (-λ)^{r-k} h(2^{-k} x)|`.
pub fn homogeneity_residual(
    h: &HomogeneousFunction,
    lambda: Complex64,
    r: usize,
    points: &[Dyadic],
) -> Result<f64, EvalError> {
    let binom: Vec<f64> = (0..=r)
        .scan(1.0, |b, k| {
            let cur = *b;
            *b = *b * (r - k) as f64 / (k + 1) as f64;
            Some(cur)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &x in points {
        let mut s = Complex64::zero();
        for (k, bk) in binom.iter().enumerate() {
            let hv = h.value(x.scaled_down(k as u32))?;
            s += hv * bk * (-lambda).powu((r - k) as u32);
        }
        worst = worst.max(s.norm());
    }
    Ok(worst)
}

/// `φ(x + k)`, `k = 0..=N`, recovered as `B⁻¹ h(x)`.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub translates: Vec<DyadicGrid>,
    /// 2-norm condition number of `B`.
    pub condition: f64,
}

/// Inverts `h = B φ⁰` on the common grid of the basis samples within
/// `[-1, 1]`.
pub fn reconstruct_phi(basis: &[HomogeneousFunction], spec: &SpectralData) -> Result<Reconstruction, EvalError> {
    let binv = spec.b.try_inverse().ok_or(EvalError::SingularBasis)?;
    let sv = singular_values(&spec.b);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let level = basis.first().map_or(0, |h| h.samples.level);
    let unit = 1i64 << level;
    let lo = basis.iter().map(|h| h.samples.start).max().unwrap_or(0).max(-unit);
    let hi = basis.iter().map(|h| h.samples.indices().end).min().unwrap_or(0).min(unit + 1);
    let n1 = spec.b.nrows();
    let cols: Vec<Vec<Complex64>> = (lo..hi)
        .into_par_iter()
        .map(|m| {
            let hv: Vec<Complex64> = basis
                .iter()
                .map(|h| h.samples.values[(m - h.samples.start) as usize])
                .collect();
            binv.mul_vec(&hv)
        })
        .collect();
    let translates = (0..n1)
        .map(|k| DyadicGrid {
            level,
            start: lo,
            values: cols.iter().map(|c| c[k]).collect(),
        })
        .collect();
    Ok(Reconstruction {
        translates,
        condition: smax / smin,
    })
}

/// `max |Σ_{k ∈ window} Y_k φ(x + k)|` over dyadic `x ∈ [0, 1]`.
///
/// The window must contain every `k` with `φ(· + k)` meeting `[0, 1]`,
/// which is `-1..=N`.
pub fn verify_dependency(eval: &RefinableEvaluation, y: &SequenceWindow, window: Range<i64>) -> Result<f64, EvalError> {
    let n = eval.mask.n() as i64;
    let needed = -1..n + 1;
    if window.start > needed.start || window.end < needed.end {
        return Err(EvalError::WindowTooSmall { needed, got: window });
    }
    let level = eval.level();
    let step = 1i64 << level;
    let yk = y.window(window.clone())?;
    let worst = (0..=step)
        .into_par_iter()
        .map(|m| {
            window
                .clone()
                .zip(&yk)
                .map(|(k, yv)| yv * eval.phi_index(m + k * step))
                .sum::<Complex64>()
                .norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Rows of `B` that are accuracy vectors: `(s, row)` for `s < accuracy`.
pub fn polynomial_rows(spec: &SpectralData) -> Vec<(usize, usize)> {
    let n = spec.b.ncols() - 1;
    (0..spec.accuracy.n)
        .filter_map(|s| {
            let p = spec.accuracy.vector(s, n);
            let pn = max_abs(&p);
            (0..spec.b.nrows())
                .find(|&i| {
                    let v = spec.b.row(i);
                    // parallel: |<v,p>| = |v||p| in the 2-norm
                    let dot: Complex64 = v.iter().zip(&p).map(|(a, b)| a.conj() * b).sum();
                    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let np: f64 = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    pn > 0.0 && (dot.norm() - nv * np).abs() <= 1e-9 * nv * np
                })
                .map(|i| (s, i))
        })
        .collect()
}

/// Least-squares fit `h ≈ a x^s` over grid points in `[lo, hi]`; returns the
/// max deviation relative to `max |h|` there.
pub fn monomial_deviation(h: &DyadicGrid, s: usize, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, Complex64)> = (0..h.len())
        .map(|i| (h.x(i), h.values[i]))
        .filter(|(x, _)| (lo..=hi).contains(x))
        .collect();
    let num: Complex64 = pts.iter().map(|(x, v)| v * x.powi(s as i32)).sum();
    let den: f64 = pts.iter().map(|(x, _)| x.powi(2 * s as i32)).sum();
    if den == 0.0 {
        return f64::INFINITY;
    }
    let a = num / den;
    let scale = pts.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let dev = pts
        .iter()
        .map(|(x, v)| (v - a * x.powi(s as i32)).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        f64::INFINITY
    } else {
        dev / scale
    }
}

/// Max relative residual of fitting each row of `a` by the rows of `b`.
pub fn span_fit_residual(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let len = a[0].len();
    // columns of the design matrix are the rows of b
    let design = CMatrix::from_fn(len, b.len(), |i, j| b[j][i]);
    a.iter()
        .map(|target| {
            let coef = crate::linalg::lstsq(&design, target);
            let fit = design.mul_vec(&coef);
            let scale = max_abs(target).max(f64::MIN_POSITIVE);
            target
                .iter()
                .zip(&fit)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
                / scale
        })
        .fold(0.0, f64::max)
}
