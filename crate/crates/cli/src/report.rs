//! JSON report blocks. Every float goes through [`num`] so that output is
//! printed with 17 significant digits.

use std::cmp::Ordering;

use num_complex::Complex64;
use refinable::linalg::{QMatrix, CMatrix};
use refinable::poly::Root;
use refinable::spectral::{spectrum, spectrum_exact, IndependenceReport, SpectralData};
use refinable::suite::{Analysis, Bound, Check};
use refinable::Mask;
use serde::Serialize;
use serde_json::value::RawValue;

pub fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no infinities
        format!("\"{x}\"")
    };
    RawValue::from_string(text).expect("formatted number is valid JSON")
}

#[derive(Serialize)]
pub struct Scalar {
    re: Box<RawValue>,
    im: Box<RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
}

impl Scalar {
    fn new(z: Complex64, exact: Option<String>) -> Self {
        Self {
            re: num(z.re),
            im: num(z.im),
            exact,
        }
    }
}

#[derive(Serialize)]
pub struct MaskBlock {
    name: Option<String>,
    n: usize,
    rational: bool,
    coefficients: Vec<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

impl MaskBlock {
    pub fn new(m: &Mask) -> Self {
        let exact = m.exact_coefficients();
        Self {
            name: m.name().map(str::to_string),
            n: m.n(),
            rational: m.is_rational(),
            coefficients: m
                .coefficients()
                .iter()
                .enumerate()
                .map(|(i, &c)| Scalar::new(c, exact.map(|q| q[i].to_string())))
                .collect(),
            warning: m.sum_warning(),
        }
    }
}

#[derive(Serialize)]
pub struct GroupBlock {
    lambda: Scalar,
    algebraic_multiplicity: usize,
    geometric_multiplicity: usize,
    chain_lengths: Vec<usize>,
}

#[derive(Serialize)]
pub struct Eigen {
    lambda: Scalar,
    multiplicity: usize,
}

#[derive(Serialize)]
pub struct SpectrumBlock {
    backend: &'static str,
    /// Eigenvalues of `T`, repeated by algebraic multiplicity.
    eigenvalues: Vec<Scalar>,
    groups: Vec<GroupBlock>,
    t0: Vec<Eigen>,
    t1: Vec<Eigen>,
}

fn order(a: Complex64, b: Complex64) -> Ordering {
    let key = |z: Complex64| ((z.norm() * 1e10).round(), if z.im.abs() <= 1e-14 * z.norm() { 0.0 } else { z.im }.atan2(z.re));
    let (ka, kb) = (key(a), key(b));
    kb.0.total_cmp(&ka.0).then(ka.1.total_cmp(&kb.1))
}

fn sub_spectrum(float: &CMatrix, exact: Option<&QMatrix>) -> Vec<Eigen> {
    let mut out: Vec<(Complex64, Option<String>, usize)> = match exact {
        Some(q) => spectrum_exact(q)
            .into_iter()
            .map(|Root { value, exact, multiplicity }| (value, exact.map(|e| e.to_string()), multiplicity))
            .collect(),
        None => spectrum(float).into_iter().map(|(z, k)| (z, None, k)).collect(),
    };
    out.sort_by(|a, b| order(a.0, b.0));
    out.into_iter()
        .map(|(z, e, k)| Eigen {
            lambda: Scalar::new(z, e),
            multiplicity: k,
        })
        .collect()
}

impl SpectrumBlock {
    pub fn new(s: &SpectralData, scale: &refinable::mask::ScaleMatrices) -> Self {
        let exact = scale.exact.as_ref();
        let mut eigenvalues = Vec::new();
        let mut groups = Vec::new();
        for g in &s.groups {
            let e = g.exact.as_ref().map(|q| q.to_string());
            for _ in 0..g.algebraic_multiplicity {
                eigenvalues.push(Scalar::new(g.lambda, e.clone()));
            }
            groups.push(GroupBlock {
                lambda: Scalar::new(g.lambda, e),
                algebraic_multiplicity: g.algebraic_multiplicity,
                geometric_multiplicity: g.geometric_multiplicity(),
                chain_lengths: g.chain_lengths(),
            });
        }
        Self {
            backend: if s.is_exact() { "exact" } else { "float" },
            eigenvalues,
            groups,
            t0: sub_spectrum(&scale.float.t0, exact.map(|b| &b.t0)),
            t1: sub_spectrum(&scale.float.t1, exact.map(|b| &b.t1)),
        }
    }
}

#[derive(Serialize)]
pub struct AccuracyBlock {
    n: usize,
    /// Coefficients of each monic `p_s`, low degree first.
    polynomials: Vec<Vec<Scalar>>,
}

impl AccuracyBlock {
    pub fn new(s: &SpectralData) -> Self {
        let a = &s.accuracy;
        Self {
            n: a.n,
            polynomials: a
                .polynomials
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    p.iter()
                        .enumerate()
                        .map(|(k, &c)| Scalar::new(c, a.exact.as_ref().map(|e| e[i][k].to_string())))
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct IndependenceBlock {
    m_invertible: bool,
    kernel_dim: usize,
    gcd_degree: usize,
    verdict: String,
}

impl IndependenceBlock {
    pub fn new(r: &IndependenceReport) -> Self {
        Self {
            m_invertible: r.m_invertible,
            kernel_dim: r.kernel_dim,
            gcd_degree: r.gcd_degree,
            verdict: r.verdict.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct BasisEntry {
    index: usize,
    lambda: Scalar,
    order: usize,
    extendable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

#[derive(Serialize)]
pub struct Residual {
    name: String,
    value: Box<RawValue>,
    tolerance: Box<RawValue>,
    bound: &'static str,
    passed: bool,
}

impl Residual {
    fn new(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            value: num(c.value),
            tolerance: num(c.tolerance),
            bound: match c.bound {
                Bound::AtMost => "at_most",
                Bound::AtLeast => "at_least",
            },
            passed: c.passed,
        }
    }
}

#[derive(Serialize)]
pub struct Report {
    pub mask: MaskBlock,
    pub spectrum: SpectrumBlock,
    pub accuracy: AccuracyBlock,
    pub independence: IndependenceBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<BasisEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<Residual>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

impl Report {
    pub fn spectral(m: &Mask, s: &SpectralData, scale: &refinable::mask::ScaleMatrices, ind: &IndependenceReport) -> Self {
        Self {
            mask: MaskBlock::new(m),
            spectrum: SpectrumBlock::new(s, scale),
            accuracy: AccuracyBlock::new(s),
            independence: IndependenceBlock::new(ind),
            basis: None,
            residuals: None,
            passed: None,
        }
    }

    /// Full report; `files` names the sample file of each basis function.
    pub fn full(a: &Analysis, checks: &[Check], files: bool) -> Self {
        let mut r = Self::spectral(&a.mask, &a.spectral, &a.scale, &a.independence);
        r.basis = Some(
            a.basis
                .iter()
                .enumerate()
                .map(|(i, h)| BasisEntry {
                    index: i,
                    lambda: Scalar::new(h.lambda, None),
                    order: h.order,
                    extendable: h.extendable(),
                    file: files.then(|| format!("h{i}.csv")),
                })
                .collect(),
        );
        r.residuals = Some(checks.iter().map(Residual::new).collect());
        r.passed = Some(checks.iter().all(|c| c.passed));
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
