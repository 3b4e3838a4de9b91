//! Two-sided sequences known on a window and extended on demand, the
//! subdivision operator, and the kernel of `L = [c_{2i-j}]_{i,j ∈ ℤ}`.

use std::collections::VecDeque;
use std::ops::{Range, RangeInclusive};
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use num_traits::Zero;
use thiserror::Error;

use crate::diffeq::{self, SequenceRule};
use crate::linalg::{max_abs, CMatrix};
use crate::mask::Mask;

/// Extension stops once a value exceeds this magnitude.
pub const OVERFLOW_LIMIT: f64 = 1e300;

#[derive(Debug, Error, PartialEq)]
pub enum ExtensionError {
    #[error("eigen-extension needs λ ≠ 0")]
    ZeroEigenvalue,
    #[error("vector is not a chain vector for this λ (residual {0:.3e})")]
    NotInKernel(f64),
    #[error("extension overflowed at index {index}")]
    Overflow { index: i64 },
    #[error("index {index} is outside the known window {lo}..{hi} and no rule extends it")]
    OutOfWindow { index: i64, lo: i64, hi: i64 },
}

/// How a sequence was built.
#[derive(Clone, Debug, PartialEq)]
pub enum Origin {
    Given,
    EigenChain { lambda: Complex64, position: usize },
    KernelOfL { root: Complex64, power: usize },
}

enum Extender {
    None,
    Zero,
    EigenChain {
        mask: Arc<[Complex64]>,
        lambda: Complex64,
        prev: Option<SequenceWindow>,
    },
    Rule(SequenceRule<Complex64>),
}

struct Cache {
    lo: i64,
    values: VecDeque<Complex64>,
}

impl Cache {
    fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64
    }

    fn covers(&self, r: &Range<i64>) -> bool {
        r.is_empty() || (self.lo <= r.start && r.end <= self.hi())
    }
}

struct Inner {
    cache: RwLock<Cache>,
    extender: Extender,
    origin: Origin,
}

/// A sequence `Y ∈ ℓ(ℤ)` known on a half-open index window.
///
/// Reads outside the window extend it through the sequence's rule and cache
/// the new values; concurrent readers see the same values.
#[derive(Clone)]
pub struct SequenceWindow {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for SequenceWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = self.inner.cache.read().unwrap();
        f.debug_struct("SequenceWindow")
            .field("window", &(c.lo..c.hi()))
            .field("origin", &self.inner.origin)
            .finish()
    }
}

impl SequenceWindow {
    fn with(lo: i64, values: Vec<Complex64>, extender: Extender, origin: Origin) -> Self {
        Self {
            inner: Arc::new(Inner {
                cache: RwLock::new(Cache {
                    lo,
                    values: values.into(),
                }),
                extender,
                origin,
            }),
        }
    }

    /// Values on `lo..lo+len`; reads outside fail.
    pub fn from_values(lo: i64, values: Vec<Complex64>) -> Self {
        Self::with(lo, values, Extender::None, Origin::Given)
    }

    /// Finitely supported sequence: zero outside the given values.
    pub fn finite(lo: i64, values: Vec<Complex64>) -> Self {
        Self::with(lo, values, Extender::Zero, Origin::Given)
    }

    pub fn from_rule(rule: SequenceRule<Complex64>, origin: Origin) -> Self {
        Self::with(0, Vec::new(), Extender::Rule(rule), origin)
    }

    pub fn origin(&self) -> &Origin {
        &self.inner.origin
    }

    /// Currently cached window.
    pub fn known(&self) -> Range<i64> {
        let c = self.inner.cache.read().unwrap();
        c.lo..c.hi()
    }

    pub fn get(&self, k: i64) -> Result<Complex64, ExtensionError> {
        self.ensure(k..k + 1)?;
        let c = self.inner.cache.read().unwrap();
        Ok(c.values[(k - c.lo) as usize])
    }

    /// Values on `range`, extending as needed.
    pub fn window(&self, range: Range<i64>) -> Result<Vec<Complex64>, ExtensionError> {
        self.ensure(range.clone())?;
        let c = self.inner.cache.read().unwrap();
        Ok(range.map(|k| c.values[(k - c.lo) as usize]).collect())
    }

    /// `Y^0 = (Y_0, …, Y_N)` or `Y^M = (Y_1, …, Y_{N-1})`.
    pub fn restrict(&self, which: Restriction, n: usize) -> Result<Vec<Complex64>, ExtensionError> {
        let n = n as i64;
        match which {
            Restriction::Full0 => self.window(0..n + 1),
            Restriction::Middle => self.window(1..n),
        }
    }

    fn ensure(&self, range: Range<i64>) -> Result<(), ExtensionError> {
        if self.inner.cache.read().unwrap().covers(&range) {
            return Ok(());
        }
        let mut c = self.inner.cache.write().unwrap();
        if c.values.is_empty() {
            c.lo = range.start;
        }
        while c.hi() < range.end {
            let k = c.hi();
            let v = self.next_value(&c, k)?;
            c.values.push_back(v);
        }
        while c.lo > range.start {
            let k = c.lo - 1;
            let v = self.next_value(&c, k)?;
            c.values.push_front(v);
            c.lo = k;
        }
        Ok(())
    }

    fn next_value(&self, c: &Cache, k: i64) -> Result<Complex64, ExtensionError> {
        let v = match &self.inner.extender {
            Extender::None => {
                return Err(ExtensionError::OutOfWindow {
                    index: k,
                    lo: c.lo,
                    hi: c.hi(),
                })
            }
            Extender::Zero => Complex64::zero(),
            Extender::Rule(rule) => rule.value(k),
            Extender::EigenChain { mask, lambda, prev } => {
                // column k of Y L = λ Y + Y_prev; every other unknown is cached
                let col = LColumnRule::from_coefficients(mask, k);
                let sum: Complex64 = col
                    .rows()
                    .zip(&col.coefficients)
                    .map(|(i, ci)| c.values[(i - c.lo) as usize] * ci)
                    .sum();
                let p = match prev {
                    Some(p) => p.get(k)?,
                    None => Complex64::zero(),
                };
                (sum - p) / lambda
            }
        };
        if !v.is_finite() || v.norm() > OVERFLOW_LIMIT {
            return Err(ExtensionError::Overflow { index: k });
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restriction {
    Full0,
    Middle,
}

/// Column `n` of `L`: the entries `c_{2i-n}` with `0 ≤ 2i - n ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct LColumnRule {
    pub n: i64,
    pub i_range: RangeInclusive<i64>,
    pub coefficients: Vec<Complex64>,
}

impl LColumnRule {
    pub fn new(mask: &Mask, n: i64) -> Self {
        Self::from_coefficients(mask.coefficients(), n)
    }

    fn from_coefficients(c: &[Complex64], n: i64) -> Self {
        let big_n = c.len() as i64 - 1;
        let lo = n.div_euclid(2) + n.rem_euclid(2);
        let hi = (n + big_n).div_euclid(2);
        Self {
            n,
            i_range: lo..=hi,
            coefficients: (lo..=hi).map(|i| c[(2 * i - n) as usize]).collect(),
        }
    }

    pub fn rows(&self) -> RangeInclusive<i64> {
        self.i_range.clone()
    }

    /// `(α L)_n`.
    pub fn apply(&self, alpha: &SequenceWindow) -> Result<Complex64, ExtensionError> {
        let vals = alpha.window(*self.i_range.start()..*self.i_range.end() + 1)?;
        Ok(vals.iter().zip(&self.coefficients).map(|(a, c)| a * c).sum())
    }
}

/// `S_c(α)_j = Σ_i α_i c_{2i-j}` on `out_window`.
pub fn subdivision(
    alpha: &SequenceWindow,
    mask: &Mask,
    out_window: Range<i64>,
) -> Result<SequenceWindow, ExtensionError> {
    let lo = out_window.start;
    let values = out_window
        .map(|j| LColumnRule::new(mask, j).apply(alpha))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SequenceWindow::from_values(lo, values))
}

/// The block of `L` with the given row and column index ranges.
pub fn materialize_l(mask: &Mask, rows: Range<i64>, cols: Range<i64>) -> CMatrix {
    let (r0, c0) = (rows.start, cols.start);
    CMatrix::from_fn(
        (rows.end - rows.start) as usize,
        (cols.end - cols.start) as usize,
        |i, j| mask.c(2 * (r0 + i as i64) - (c0 + j as i64)),
    )
}

/// The unique `Y` with `Y^0 = v` and `Y L = λ Y + Y_prev`.
///
/// `chain_prev` is the extension of the previous vector of a Jordan chain;
/// absent for an eigenvector. Values are computed on `out_window` and
/// further on demand.
pub fn eigen_extend(
    v: &[Complex64],
    chain_prev: Option<&SequenceWindow>,
    mask: &Mask,
    lambda: Complex64,
    out_window: Range<i64>,
) -> Result<SequenceWindow, ExtensionError> {
    if lambda.is_zero() {
        return Err(ExtensionError::ZeroEigenvalue);
    }
    let n = mask.n();
    let t = mask.scale_matrices().float.t;
    let prev0 = match chain_prev {
        Some(p) => p.restrict(Restriction::Full0, n)?,
        None => vec![Complex64::zero(); n + 1],
    };
    let lhs = t.shifted(&lambda).vec_mul(v);
    let resid = lhs
        .iter()
        .zip(&prev0)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = max_abs(v).max(max_abs(&prev0)) * t.norm_inf().max(1.0);
    if resid > 1e-9 * scale.max(f64::MIN_POSITIVE) && resid > 0.0 {
        return Err(ExtensionError::NotInKernel(resid));
    }
    let position = match chain_prev.map(|p| p.origin()) {
        Some(Origin::EigenChain { position, .. }) => position + 1,
        Some(_) => 2,
        None => 1,
    };
    let y = SequenceWindow::with(
        0,
        v.to_vec(),
        Extender::EigenChain {
            mask: mask.coefficients().into(),
            lambda,
            prev: chain_prev.cloned(),
        },
        Origin::EigenChain { lambda, position },
    );
    y.ensure(out_window)?;
    Ok(y)
}

/// Basis of `ker L = {Y : Y L = 0}` from the common roots of `p_e` and `p_o`.
pub fn kernel_of_l(mask: &Mask) -> Vec<SequenceWindow> {
    let sys = diffeq::mask_system(&mask.polynomials());
    let basis = sys.solution_basis();
    (0..basis.len())
        .map(|i| {
            let (s, j) = basis.index(i);
            let mut alpha = vec![Complex64::zero(); basis.len()];
            alpha[i] = Complex64::new(1.0, 0.0);
            SequenceWindow::from_rule(
                SequenceRule {
                    basis: basis.clone(),
                    alpha,
                },
                Origin::KernelOfL {
                    root: basis.roots().pairs()[s].0,
                    power: j,
                },
            )
        })
        .collect()
}
