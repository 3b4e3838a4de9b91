//! Masks, scale matrices and the even/odd mask polynomials.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::Value;
use thiserror::Error;

use crate::linalg::{rational_to_f64, Mat, QMatrix, CMatrix, Scalar};
use crate::poly::{degree_exact, trim_float};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("invalid mask document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("mask document has no \"coefficients\" array")]
    MissingCoefficients,
    #[error("mask needs at least two coefficients, got {0}")]
    TooShort(usize),
    #[error("coefficient {index} is malformed: {text}")]
    Malformed { index: usize, text: String },
    #[error("c_{index} must be nonzero (support is [0, N])")]
    ZeroEndpoint { index: usize },
    #[error("coefficient {index} is complex, exact arithmetic needs real coefficients")]
    ComplexExact { index: usize },
}

/// A finite refinement mask `c_0..c_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    coefficients: Vec<Complex64>,
    exact: Option<Vec<BigRational>>,
    name: Option<String>,
}

impl Mask {
    /// Floating mask. Fails when an endpoint coefficient vanishes.
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self, MaskError> {
        validate(&coefficients)?;
        Ok(Self {
            coefficients,
            exact: None,
            name: None,
        })
    }

    /// Rational mask; the exact backend is available for it.
    pub fn from_rationals(coefficients: Vec<BigRational>) -> Result<Self, MaskError> {
        let float: Vec<Complex64> = coefficients.iter().map(Scalar::to_c64).collect();
        validate(&float)?;
        if let Some(index) = [0, coefficients.len() - 1]
            .into_iter()
            .find(|&i| coefficients[i].is_zero())
        {
            return Err(MaskError::ZeroEndpoint { index });
        }
        Ok(Self {
            coefficients: float,
            exact: Some(coefficients),
            name: None,
        })
    }

    pub fn from_real(coefficients: &[f64]) -> Result<Self, MaskError> {
        Self::new(coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Rational mask from `(numerator, denominator)` pairs.
    pub fn from_ratios(coefficients: &[(i64, i64)]) -> Result<Self, MaskError> {
        Self::from_rationals(
            coefficients
                .iter()
                .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
                .collect(),
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn exact_coefficients(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Support length: `supp φ = [0, N]`.
    pub fn n(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_rational(&self) -> bool {
        self.exact.is_some()
    }

    /// `c_t`, zero outside `0..=N`.
    pub fn c(&self, t: i64) -> Complex64 {
        usize::try_from(t)
            .ok()
            .and_then(|t| self.coefficients.get(t).copied())
            .unwrap_or_default()
    }

    /// Same mask with every double converted to the rational it represents.
    pub fn to_exact(&self) -> Result<Self, MaskError> {
        if self.is_rational() {
            return Ok(self.clone());
        }
        let mut exact = Vec::with_capacity(self.coefficients.len());
        for (index, c) in self.coefficients.iter().enumerate() {
            if c.im != 0.0 {
                return Err(MaskError::ComplexExact { index });
            }
            exact.push(BigRational::from_float(c.re).ok_or_else(|| MaskError::Malformed {
                index,
                text: c.re.to_string(),
            })?);
        }
        let mut m = Self::from_rationals(exact)?;
        m.name = self.name.clone();
        Ok(m)
    }

    /// Warning text when `Σ c_k ≠ 2`. Never an error.
    pub fn sum_warning(&self) -> Option<String> {
        let s: Complex64 = self.coefficients.iter().sum();
        let off = match &self.exact {
            Some(q) => {
                let sum = q.iter().sum::<BigRational>();
                (sum != BigRational::from_integer(2.into())).then(|| sum.to_string())
            }
            None => ((s - 2.0).norm() > 1e-12).then(|| fmt_c(s)),
        };
        off.map(|sum| format!("coefficients sum to {sum} (expected 2 for an integrable solution)"))
    }

    pub fn scale_matrices(&self) -> ScaleMatrices {
        ScaleMatrices {
            float: Blocks::build(&self.coefficients),
            exact: self.exact.as_deref().map(Blocks::build),
        }
    }

    pub fn polynomials(&self) -> MaskPolynomials {
        let (p_e, p_o) = split(&self.coefficients);
        let exact = self.exact.as_deref().map(split);
        let n = self.n();
        let degree = |p: &[Complex64]| trim_float(p, 0.0).len().checked_sub(1);
        MaskPolynomials {
            trimmed_degree_e: match &exact {
                Some((e, _)) => degree_exact(e),
                None => degree(&p_e),
            },
            trimmed_degree_o: match &exact {
                Some((_, o)) => degree_exact(o),
                None => degree(&p_o),
            },
            p_e,
            p_o,
            exact,
            q: (n % 2 == 1).then_some((n - 1) / 2),
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn validate(c: &[Complex64]) -> Result<(), MaskError> {
    if c.len() < 2 {
        return Err(MaskError::TooShort(c.len()));
    }
    for index in [0, c.len() - 1] {
        if c[index] == Complex64::zero() {
            return Err(MaskError::ZeroEndpoint { index });
        }
    }
    for (index, z) in c.iter().enumerate() {
        if !z.is_finite() {
            return Err(MaskError::Malformed {
                index,
                text: fmt_c(*z),
            });
        }
    }
    Ok(())
}

fn split<S: Clone>(c: &[S]) -> (Vec<S>, Vec<S>) {
    let even = c.iter().step_by(2).cloned().collect();
    let odd = c.iter().skip(1).step_by(2).cloned().collect();
    (even, odd)
}

/// `T`, `T0`, `T1` and `M` over one scalar type.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks<S> {
    pub t: Mat<S>,
    pub t0: Mat<S>,
    pub t1: Mat<S>,
    pub m: Mat<S>,
}

impl<S: Scalar> Blocks<S> {
    /// `T[i][j] = c_{2i-j}` for `i, j = 0..=N`.
    pub fn build(c: &[S]) -> Self {
        let n = c.len() - 1;
        let t = Mat::from_fn(n + 1, n + 1, |i, j| {
            (2 * i)
                .checked_sub(j)
                .and_then(|k| c.get(k).cloned())
                .unwrap_or_else(S::zero)
        });
        Self {
            t0: t.principal(0, n),
            t1: t.principal(1, n + 1),
            m: t.principal(1, n),
            t,
        }
    }
}

/// Scale matrices of a mask: always in floating point, and exactly when the
/// mask is rational.
#[derive(Clone, Debug)]
pub struct ScaleMatrices {
    pub float: Blocks<Complex64>,
    pub exact: Option<Blocks<BigRational>>,
}

impl ScaleMatrices {
    pub fn n(&self) -> usize {
        self.float.t.nrows() - 1
    }

    pub fn t(&self) -> &CMatrix {
        &self.float.t
    }

    pub fn m(&self) -> &CMatrix {
        &self.float.m
    }

    pub fn exact_t(&self) -> Option<&QMatrix> {
        self.exact.as_ref().map(|b| &b.t)
    }
}

/// `p_e(x) = c_0 + c_2 x + …` and `p_o(x) = c_1 + c_3 x + …`.
#[derive(Clone, Debug)]
pub struct MaskPolynomials {
    pub p_e: Vec<Complex64>,
    pub p_o: Vec<Complex64>,
    pub exact: Option<(Vec<BigRational>, Vec<BigRational>)>,
    /// Nominal degree `(N-1)/2`, only meaningful for odd `N`.
    pub q: Option<usize>,
    pub trimmed_degree_e: Option<usize>,
    pub trimmed_degree_o: Option<usize>,
}

impl MaskPolynomials {
    /// Interleaves the two lists back into a mask.
    pub fn interleave(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.p_e.len() + self.p_o.len());
        for k in 0..self.p_e.len().max(self.p_o.len()) {
            out.extend(self.p_e.get(k));
            out.extend(self.p_o.get(k));
        }
        out
    }
}

/// Parses `{"name": ..., "coefficients": [...]}`.
///
/// Entries may be JSON integers or `"p/q"` strings (exact), other JSON numbers
/// (IEEE doubles) or `{"re": .., "im": ..}` objects. The mask is rational only
/// when every entry is exact.
pub fn parse_mask(source: &str) -> Result<Mask, MaskError> {
    let doc: Value = serde_json::from_str(source)?;
    let arr = doc
        .get("coefficients")
        .and_then(Value::as_array)
        .ok_or(MaskError::MissingCoefficients)?;
    if arr.len() < 2 {
        return Err(MaskError::TooShort(arr.len()));
    }
    let mut exact = Some(Vec::new());
    let mut float = Vec::new();
    for (index, v) in arr.iter().enumerate() {
        let bad = || MaskError::Malformed {
            index,
            text: v.to_string(),
        };
        match v {
            Value::String(s) => {
                let q = parse_ratio(s).ok_or_else(bad)?;
                float.push(Complex64::new(rational_to_f64(&q), 0.0));
                if let Some(e) = exact.as_mut() {
                    e.push(q);
                }
            }
            Value::Number(num) => {
                if let Some(i) = num.as_i64() {
                    float.push(Complex64::new(i as f64, 0.0));
                    if let Some(e) = exact.as_mut() {
                        e.push(BigRational::from_integer(i.into()));
                    }
                } else {
                    float.push(Complex64::new(num.as_f64().ok_or_else(bad)?, 0.0));
                    exact = None;
                }
            }
            Value::Object(o) => {
                let part = |key: &str| match o.get(key) {
                    None => Some(0.0),
                    Some(Value::Number(n)) => n.as_f64(),
                    Some(Value::String(s)) => parse_ratio(s).map(|q| rational_to_f64(&q)),
                    _ => None,
                };
                let re = part("re").ok_or_else(bad)?;
                let im = part("im").ok_or_else(bad)?;
                float.push(Complex64::new(re, im));
                exact = None;
            }
            _ => return Err(bad()),
        }
    }
    let mask = match exact {
        Some(q) => Mask::from_rationals(q)?,
        None => Mask::new(float)?,
    };
    Ok(match doc.get("name").and_then(Value::as_str) {
        Some(name) => mask.with_name(name),
        None => mask,
    })
}

/// `"p/q"` or `"p"` with integer parts.
fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().ok()?;
    let q: BigInt = q.parse().ok()?;
    (!q.is_zero()).then(|| BigRational::new(p, q))
}
