//! Eigenstructure of the scale matrix `T`: Jordan chains, the basis matrix
//! `B`, accuracy, and the independence test through `M`.

mod jordan;

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::diffeq;
use crate::linalg::{
    charpoly, eigenvalues, max_abs, CMatrix, ExactOracle, FloatOracle, Mat, QMatrix, RankOracle, Scalar,
};
use crate::mask::{MaskPolynomials, ScaleMatrices};
use crate::poly::{self, Root};

use jordan::{jordan_chains, ChainFailure};

/// Relative tolerance for grouping computed eigenvalues.
pub const EIG_CLUSTER_TOL: f64 = 1e-8;
/// Clusters that fail the rank test are merged with neighbours this close.
pub const EIG_MERGE_TOL: f64 = 1e-4;
/// Singular value cutoff (relative to `‖T‖^k`) for ranks of `(T - λI)^k`.
pub const RANK_TOL: f64 = 1e-10;
/// Minimum distance of a new chain head from the span already chosen.
const INDEP_TOL: f64 = 1e-6;
/// Relative residual for membership in `ker (T - λI)^r`.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigenvalue clusters {values:?} are ambiguous (nullities {nullities:?})")]
    Clustering {
        values: Vec<Complex64>,
        nullities: Vec<usize>,
    },
    #[error("dim ker M = {kernel_dim} but deg gcd(p_e, p_o) = {gcd_degree}")]
    Inconsistent { kernel_dim: usize, gcd_degree: usize },
    #[error("{0}")]
    Precondition(String),
}

/// A Jordan chain `v_1, …, v_k`: `v_1 (T-λI) = 0`, `v_j (T-λI) = v_{j-1}`.
#[derive(Clone, Debug)]
pub struct JordanChain {
    pub vectors: Vec<Vec<Complex64>>,
    pub exact: Option<Vec<Vec<BigRational>>>,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct EigenvalueGroup {
    pub lambda: Complex64,
    pub exact: Option<BigRational>,
    pub algebraic_multiplicity: usize,
    pub chains: Vec<JordanChain>,
}

impl EigenvalueGroup {
    pub fn geometric_multiplicity(&self) -> usize {
        self.chains.len()
    }

    pub fn chain_lengths(&self) -> Vec<usize> {
        self.chains.iter().map(JordanChain::len).collect()
    }
}

/// Where a row of `B` comes from.
#[derive(Clone, Debug, PartialEq)]
pub struct RowInfo {
    pub group: usize,
    pub chain: usize,
    /// 1-based position in the chain, which is the order of the row.
    pub position: usize,
    pub lambda: Complex64,
}

/// Rows of `B` equal to `(1,0,…,0)` and `(0,…,0,1)`, when present.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConventionRows {
    pub first: Option<usize>,
    pub last: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct AccuracyResult {
    pub n: usize,
    /// Monic `p_s`, coefficients low degree first.
    pub polynomials: Vec<Vec<Complex64>>,
    pub exact: Option<Vec<Vec<BigRational>>>,
}

impl AccuracyResult {
    /// `(p_s(0), …, p_s(N))`.
    pub fn vector(&self, s: usize, n: usize) -> Vec<Complex64> {
        (0..=n)
            .map(|k| poly::eval_float(&self.polynomials[s], Complex64::new(k as f64, 0.0)))
            .collect()
    }

    pub fn vector_exact(&self, s: usize, n: usize) -> Option<Vec<BigRational>> {
        let p = &self.exact.as_ref()?[s];
        Some(
            (0..=n)
                .map(|k| poly::eval_exact(p, &BigRational::from_integer(BigInt::from(k))))
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub groups: Vec<EigenvalueGroup>,
    /// Rows are the Jordan basis.
    pub b: CMatrix,
    pub exact_b: Option<QMatrix>,
    /// `J` with `B T = J B`: `λ` on the diagonal, and a 1 at
    /// `(row of v_j, row of v_{j-1})` inside each chain.
    pub jordan: CMatrix,
    pub exact_jordan: Option<QMatrix>,
    pub rows: Vec<RowInfo>,
    pub convention_rows: ConventionRows,
    pub accuracy: AccuracyResult,
}

impl SpectralData {
    /// `‖B T - J B‖∞`; exactly zero in exact mode.
    pub fn jordan_residual(&self, s: &ScaleMatrices) -> f64 {
        if let (Some(b), Some(j), Some(t)) = (&self.exact_b, &self.exact_jordan, s.exact_t()) {
            let d = b.matmul(t);
            let e = j.matmul(b);
            let diff = Mat::from_fn(d.nrows(), d.ncols(), |i, k| d.get(i, k) - e.get(i, k));
            return diff.norm_inf();
        }
        let d = self.b.matmul(s.t());
        let e = self.jordan.matmul(&self.b);
        Mat::from_fn(d.nrows(), d.ncols(), |i, k| d.get(i, k) - e.get(i, k)).norm_inf()
    }

    /// Eigenvalues with algebraic multiplicities, in report order.
    pub fn spectrum(&self) -> Vec<(Complex64, usize)> {
        self.groups
            .iter()
            .map(|g| (g.lambda, g.algebraic_multiplicity))
            .collect()
    }

    pub fn is_exact(&self) -> bool {
        self.exact_b.is_some()
    }

    /// Row of `B` preceding `row` in its chain.
    pub fn predecessor(&self, row: usize) -> Option<usize> {
        let info = &self.rows[row];
        (info.position > 1).then(|| {
            self.rows
                .iter()
                .position(|r| r.group == info.group && r.chain == info.chain && r.position == info.position - 1)
                .expect("chain rows are complete")
        })
    }
}

/// Eigenvalues of a square matrix, clustered at [`EIG_CLUSTER_TOL`].
pub fn spectrum(m: &CMatrix) -> Vec<(Complex64, usize)> {
    poly::cluster(&eigenvalues(m), EIG_CLUSTER_TOL)
}

/// Eigenvalues of a rational matrix from its characteristic polynomial;
/// rational eigenvalues are exact.
pub fn spectrum_exact(m: &QMatrix) -> Vec<Root> {
    poly::roots_exact(&charpoly(m, |k| BigRational::from_integer(BigInt::from(k))))
}

fn sort_key(z: Complex64) -> (f64, f64) {
    let modulus = (z.norm() * 1e10).round() / 1e10;
    let im = if z.im.abs() <= 1e-14 * z.norm() { 0.0 } else { z.im };
    (-modulus, im.atan2(z.re))
}

fn group_order(a: &EigenvalueGroup, b: &EigenvalueGroup) -> Ordering {
    let (ka, kb) = (sort_key(a.lambda), sort_key(b.lambda));
    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
}

fn exact_independence(base: &[Vec<BigRational>], w: &[BigRational]) -> Option<f64> {
    let before = if base.is_empty() {
        0
    } else {
        ExactOracle.rank(&QMatrix::from_columns(base, w.len()))
    };
    let mut all = base.to_vec();
    all.push(w.to_vec());
    (ExactOracle.rank(&QMatrix::from_columns(&all, w.len())) > before).then_some(1.0)
}

/// Distance of `w/‖w‖` from the span of `base`.
fn float_independence(base: &[Vec<Complex64>], w: &[Complex64]) -> Option<f64> {
    let unit = |v: &[Complex64]| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (n > 0.0).then(|| v.iter().map(|z| z / n).collect::<Vec<_>>())
    };
    let w = unit(w)?;
    let cols: Vec<Vec<Complex64>> = base.iter().filter_map(|v| unit(v)).collect();
    let mut r = w.clone();
    if !cols.is_empty() {
        let m = DMatrix::from_fn(w.len(), cols.len(), |i, j| cols[j][i]);
        let svd = m.svd(true, false);
        let u = svd.u.expect("u requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= 1e-10 * smax {
                continue;
            }
            let c: Complex64 = (0..w.len()).map(|i| u[(i, k)].conj() * w[i]).sum();
            for (i, ri) in r.iter_mut().enumerate() {
                *ri -= u[(i, k)] * c;
            }
        }
    }
    let dist = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (dist > INDEP_TOL).then_some(dist)
}

fn float_oracle_for(t: &CMatrix) -> impl Fn(usize) -> FloatOracle {
    let norm = t.norm_inf().max(1.0);
    move |k| FloatOracle::new(RANK_TOL, norm.powi(k as i32))
}

fn unit(n: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::zero(); n];
    v[i] = Complex64::one();
    v
}

fn unit_exact(n: usize, i: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n];
    v[i] = BigRational::one();
    v
}

fn normalize_chain<S: Scalar, O: RankOracle<S>>(chain: Vec<Vec<S>>, oracle: &O) -> Vec<Vec<S>> {
    match oracle.normalizer(&chain[0]) {
        Some(s) => chain
            .into_iter()
            .map(|v| v.into_iter().map(|x| x * s.clone()).collect())
            .collect(),
        None => chain,
    }
}

/// Chains in floating point for a cluster around `mu`.
fn float_group(
    t: &CMatrix,
    mu: Complex64,
    mult: usize,
    preferred: &[Vec<Complex64>],
) -> Result<Vec<JordanChain>, ChainFailure> {
    let chains = jordan_chains(t, &mu, mult, preferred, float_oracle_for(t), float_independence)?;
    let o = FloatOracle::new(RANK_TOL, 1.0);
    Ok(chains
        .into_iter()
        .map(|c| JordanChain {
            vectors: normalize_chain(c, &o),
            exact: None,
        })
        .collect())
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// Preferred chain bottoms for an eigenvalue: accuracy vectors, then
/// `(0,…,0,1)`, then `(1,0,…,0)`.
fn preferred_float(s: &ScaleMatrices, acc: &AccuracyResult, members: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = s.n();
    let hit = |lam: Complex64| members.iter().any(|&m| close(m, lam, 1e-6));
    let mut out = Vec::new();
    for k in 0..acc.n {
        if hit(Complex64::new(0.5f64.powi(k as i32), 0.0)) {
            out.push(acc.vector(k, n));
        }
    }
    if hit(*s.t().get(n, n)) {
        out.push(unit(n + 1, n));
    }
    if hit(*s.t().get(0, 0)) {
        out.push(unit(n + 1, 0));
    }
    out
}

fn float_groups(s: &ScaleMatrices, acc: &AccuracyResult) -> Result<Vec<EigenvalueGroup>, SpectralError> {
    let t = s.t();
    let n = s.n();
    let mut values = vec![*t.get(0, 0), *t.get(n, n)];
    values.extend(eigenvalues(s.m()));
    let mut clusters = poly::cluster_members(&values, EIG_CLUSTER_TOL);
    'restart: loop {
        let mut groups = Vec::new();
        for i in 0..clusters.len() {
            let mu = poly::mean(&clusters[i]);
            let mult = clusters[i].len();
            match float_group(t, mu, mult, &preferred_float(s, acc, &clusters[i])) {
                Ok(chains) => groups.push(EigenvalueGroup {
                    lambda: mu,
                    exact: None,
                    algebraic_multiplicity: mult,
                    chains,
                }),
                Err(f) => {
                    let near: Vec<usize> = (0..clusters.len())
                        .filter(|&j| j != i && close(poly::mean(&clusters[j]), mu, EIG_MERGE_TOL))
                        .collect();
                    if near.is_empty() {
                        return Err(SpectralError::Clustering {
                            values: clusters[i].clone(),
                            nullities: f.nullities,
                        });
                    }
                    let mut merged = clusters[i].clone();
                    for &j in &near {
                        merged.extend(clusters[j].iter().copied());
                    }
                    let mut rest: Vec<Vec<Complex64>> = clusters
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i && !near.contains(j))
                        .map(|(_, c)| c.clone())
                        .collect();
                    rest.insert(i.min(rest.len()), merged);
                    clusters = rest;
                    continue 'restart;
                }
            }
        }
        return Ok(groups);
    }
}

fn exact_groups(
    s: &ScaleMatrices,
    qt: &QMatrix,
    acc: &AccuracyResult,
) -> Result<Vec<EigenvalueGroup>, SpectralError> {
    let n = s.n();
    let mut groups = Vec::new();
    for root in spectrum_exact(qt) {
        let mult = root.multiplicity;
        let chains = match &root.exact {
            Some(lam) => {
                let mut pref = Vec::new();
                for k in 0..acc.n {
                    let two_k = BigRational::from_integer(BigInt::from(2).pow(k as u32));
                    if *lam == two_k.recip() {
                        pref.extend(acc.vector_exact(k, n));
                    }
                }
                if lam == qt.get(n, n) {
                    pref.push(unit_exact(n + 1, n));
                }
                if lam == qt.get(0, 0) {
                    pref.push(unit_exact(n + 1, 0));
                }
                let chains = jordan_chains(qt, lam, mult, &pref, |_| ExactOracle, exact_independence)
                    .map_err(|f| SpectralError::Clustering {
                        values: vec![root.value],
                        nullities: f.nullities,
                    })?;
                chains
                    .into_iter()
                    .map(|c| {
                        let c = normalize_chain(c, &ExactOracle);
                        JordanChain {
                            vectors: c.iter().map(|v| v.iter().map(Scalar::to_c64).collect()).collect(),
                            exact: Some(c),
                        }
                    })
                    .collect()
            }
            None => float_group(s.t(), root.value, mult, &[]).map_err(|f| SpectralError::Clustering {
                values: vec![root.value],
                nullities: f.nullities,
            })?,
        };
        groups.push(EigenvalueGroup {
            lambda: root.value,
            exact: root.exact.clone(),
            algebraic_multiplicity: mult,
            chains,
        });
    }
    Ok(groups)
}

/// Spectrum, Jordan chains and the basis matrix `B` of `T`.
///
/// Rational masks use exact arithmetic for every rational eigenvalue; other
/// eigenvalues fall back to floating point.
pub fn eigen_structure(s: &ScaleMatrices) -> Result<SpectralData, SpectralError> {
    let acc = accuracy(s);
    let groups = match &s.exact {
        Some(q) => exact_groups(s, &q.t, &acc)?,
        None => float_groups(s, &acc)?,
    };
    Ok(assemble(s, groups, acc))
}

/// Same as [`eigen_structure`] but always in floating point.
pub fn eigen_structure_float(s: &ScaleMatrices) -> Result<SpectralData, SpectralError> {
    let acc = accuracy_float(s);
    let groups = float_groups(s, &acc)?;
    Ok(assemble(s, groups, acc))
}

fn assemble(s: &ScaleMatrices, mut groups: Vec<EigenvalueGroup>, accuracy: AccuracyResult) -> SpectralData {
    let n = s.n();
    groups.sort_by(group_order);
    for g in &mut groups {
        g.chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    }
    let mut rows = Vec::new();
    let mut b_rows = Vec::new();
    let mut exact_rows: Option<Vec<Vec<BigRational>>> = Some(Vec::new());
    for (gi, g) in groups.iter().enumerate() {
        for (ci, c) in g.chains.iter().enumerate() {
            for (pi, v) in c.vectors.iter().enumerate() {
                rows.push(RowInfo {
                    group: gi,
                    chain: ci,
                    position: pi + 1,
                    lambda: g.lambda,
                });
                b_rows.push(v.clone());
                match (&mut exact_rows, &c.exact) {
                    (Some(e), Some(ce)) => e.push(ce[pi].clone()),
                    _ => exact_rows = None,
                }
            }
        }
    }
    // (0,…,0,1) goes last
    let e_n = unit(n + 1, n);
    if let Some(i) = b_rows.iter().position(|r| *r == e_n) {
        let r = b_rows.remove(i);
        b_rows.push(r);
        let info = rows.remove(i);
        rows.push(info);
        if let Some(e) = exact_rows.as_mut() {
            let r = e.remove(i);
            e.push(r);
        }
    }
    let e_0 = unit(n + 1, 0);
    let convention_rows = ConventionRows {
        first: b_rows.iter().position(|r| *r == e_0),
        last: b_rows.iter().position(|r| *r == e_n),
    };

    let dim = b_rows.len();
    let mut jordan = CMatrix::zeros(dim, dim);
    let mut exact_jordan = exact_rows.as_ref().map(|_| QMatrix::zeros(dim, dim));
    for (r, info) in rows.iter().enumerate() {
        let g = &groups[info.group];
        jordan.set(r, r, g.lambda);
        if let (Some(j), Some(lam)) = (exact_jordan.as_mut(), &g.exact) {
            j.set(r, r, lam.clone());
        }
        if info.position > 1 {
            let prev = rows
                .iter()
                .position(|o| o.group == info.group && o.chain == info.chain && o.position == info.position - 1)
                .unwrap();
            jordan.set(r, prev, Complex64::one());
            if let Some(j) = exact_jordan.as_mut() {
                j.set(r, prev, BigRational::one());
            }
        }
    }
    if groups.iter().any(|g| g.exact.is_none()) {
        exact_jordan = None;
        exact_rows = None;
    }
    SpectralData {
        b: CMatrix::from_rows(&b_rows),
        exact_b: exact_rows.map(|e| QMatrix::from_rows(&e)),
        jordan,
        exact_jordan,
        groups,
        rows,
        convention_rows,
        accuracy,
    }
}

fn vandermonde<S: Scalar>(n: usize, s: usize) -> Mat<S> {
    Mat::from_fn(n + 1, s + 1, |k, j| crate::linalg::powi(&S::from_i64(k as i64), j as i64))
}

/// Largest `n` such that for each `s < n` some polynomial of exact degree `s`
/// gives a left eigenvector `(p_s(0), …, p_s(N))` of `T` for `2^{-s}`.
pub fn accuracy(s: &ScaleMatrices) -> AccuracyResult {
    match &s.exact {
        Some(q) => accuracy_exact(&q.t),
        None => accuracy_float(s),
    }
}

fn accuracy_exact(t: &QMatrix) -> AccuracyResult {
    let n = t.nrows() - 1;
    let mut polys = Vec::new();
    for deg in 0..=n {
        let lam = BigRational::from_integer(BigInt::from(2).pow(deg as u32)).recip();
        let c = t.shifted(&lam).transpose().matmul(&vandermonde(n, deg));
        let found = ExactOracle
            .nullspace(&c)
            .into_iter()
            .find(|a| !a[deg].is_zero());
        match found {
            Some(a) => {
                let lead = a[deg].clone();
                polys.push(a.into_iter().map(|x| x / &lead).collect::<Vec<_>>());
            }
            None => break,
        }
    }
    AccuracyResult {
        n: polys.len(),
        polynomials: polys.iter().map(|p| p.iter().map(Scalar::to_c64).collect()).collect(),
        exact: Some(polys),
    }
}

fn accuracy_float(s: &ScaleMatrices) -> AccuracyResult {
    let t = s.t();
    let n = t.nrows() - 1;
    let mut polys = Vec::new();
    for deg in 0..=n {
        let lam = Complex64::new(0.5f64.powi(deg as i32), 0.0);
        let c = t.shifted(&lam).transpose().matmul(&vandermonde(n, deg));
        // columns of V grow like k^j; balance before the rank decision
        let v = vandermonde::<Complex64>(n, deg);
        let vscale: Vec<f64> = (0..=deg).map(|j| max_abs(&v.column(j)).max(1.0)).collect();
        let cs = Mat::from_fn(c.nrows(), c.ncols(), |i, j| c.get(i, j) / vscale[j]);
        let oracle = FloatOracle::new(RANK_TOL, t.norm_inf().max(1.0));
        let best = oracle
            .nullspace(&cs)
            .into_iter()
            .max_by(|a, b| a[deg].norm().total_cmp(&b[deg].norm()));
        match best {
            Some(a) if a[deg].norm() > 1e-8 => {
                let coeffs: Vec<Complex64> = a.iter().zip(&vscale).map(|(x, s)| x / s).collect();
                let lead = coeffs[deg];
                polys.push(coeffs.into_iter().map(|x| x / lead).collect::<Vec<_>>());
            }
            _ => break,
        }
    }
    AccuracyResult {
        n: polys.len(),
        polynomials: polys,
        exact: None,
    }
}

/// Verdict of the independence test. Invertibility of `M` is necessary for
/// independent translates, not known to be sufficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dependent,
    NotContradicted,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Dependent => "translates DEPENDENT",
            Verdict::NotContradicted => "independence not contradicted",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    pub m_invertible: bool,
    pub kernel_dim: usize,
    pub gcd_degree: usize,
    pub verdict: Verdict,
}

pub fn independence_test(s: &ScaleMatrices, p: &MaskPolynomials) -> Result<IndependenceReport, SpectralError> {
    let kernel_dim = match &s.exact {
        Some(q) => ExactOracle.nullspace(&q.m).len(),
        None => FloatOracle::new(RANK_TOL, s.t().norm_inf()).nullspace(s.m()).len(),
    };
    let gcd_degree = diffeq::mask_gcd_degree(p);
    if kernel_dim != gcd_degree {
        return Err(SpectralError::Inconsistent {
            kernel_dim,
            gcd_degree,
        });
    }
    let m_invertible = kernel_dim == 0;
    Ok(IndependenceReport {
        m_invertible,
        kernel_dim,
        gcd_degree,
        verdict: if m_invertible {
            Verdict::NotContradicted
        } else {
            Verdict::Dependent
        },
    })
}

fn in_kernel_power(v: &[Complex64], a: &CMatrix, r: usize) -> bool {
    let mut w = v.to_vec();
    for _ in 0..r {
        w = a.vec_mul(&w);
    }
    max_abs(&w) <= KERNEL_TOL * max_abs(v) * a.norm_inf().max(1.0).powi(r as i32)
}

/// Restriction `v^M = (v_1, …, v_{N-1})` of `v ∈ ker (T-λI)^r`.
pub fn kernel_transfer(
    v0: &[Complex64],
    s: &ScaleMatrices,
    lambda: Complex64,
    r: usize,
) -> Result<Vec<Complex64>, SpectralError> {
    let n = s.n();
    if v0.len() != n + 1 {
        return Err(SpectralError::Precondition(format!("vector has length {}, expected {}", v0.len(), n + 1)));
    }
    if lambda.is_zero() {
        return Err(SpectralError::Precondition("λ = 0".into()));
    }
    if !in_kernel_power(v0, &s.t().shifted(&lambda), r) {
        return Err(SpectralError::Precondition(format!("vector is not in ker(T - λI)^{r}")));
    }
    let vm = v0[1..n].to_vec();
    if !in_kernel_power(&vm, &s.m().shifted(&lambda), r) && max_abs(&vm) > 0.0 {
        return Err(SpectralError::Precondition("restriction left ker(M - λI)^r".into()));
    }
    let corner = |i: usize| close(*s.t().get(i, i), lambda, EIG_CLUSTER_TOL);
    if max_abs(v0) > 0.0 && !corner(0) && !corner(n) && max_abs(&vm) <= KERNEL_TOL * max_abs(v0) {
        return Err(SpectralError::Precondition("restriction vanished".into()));
    }
    Ok(vm)
}

/// Extends `v^M ∈ ker (M-λI)^r` to `v ∈ ker (T-λI)^r` with the same middle
/// coordinates. Refused for `λ ∈ {0, c_0, c_N}`.
pub fn kernel_lift(
    vm: &[Complex64],
    s: &ScaleMatrices,
    lambda: Complex64,
    r: usize,
) -> Result<Vec<Complex64>, SpectralError> {
    let n = s.n();
    let t = s.t();
    if vm.len() + 1 != n {
        return Err(SpectralError::Precondition(format!("vector has length {}, expected {}", vm.len(), n - 1)));
    }
    for (what, z) in [("0", Complex64::zero()), ("c_0", *t.get(0, 0)), ("c_N", *t.get(n, n))] {
        if close(z, lambda, EIG_CLUSTER_TOL) {
            return Err(SpectralError::Precondition(format!("λ = {what}, lift not available")));
        }
    }
    if !in_kernel_power(vm, &s.m().shifted(&lambda), r) {
        return Err(SpectralError::Precondition(format!("vector is not in ker(M - λI)^{r}")));
    }
    let p = t.shifted(&lambda).pow(r);
    let (alpha, beta) = (*p.get(0, 0), *p.get(n, n));
    let mut v = vec![Complex64::zero(); n + 1];
    v[1..n].copy_from_slice(vm);
    let x: Complex64 = (1..n).map(|i| vm[i - 1] * p.get(i, 0)).sum();
    let y: Complex64 = (1..n).map(|i| vm[i - 1] * p.get(i, n)).sum();
    v[0] = -x / alpha;
    v[n] = -y / beta;
    Ok(v)
}

/// Smallest `r` with `v (T-λI)^r = 0`; zero for the zero vector.
pub fn minimal_order(v: &[Complex64], s: &ScaleMatrices, lambda: Complex64) -> Result<usize, SpectralError> {
    let scale = max_abs(v);
    if scale == 0.0 {
        return Ok(0);
    }
    let a = s.t().shifted(&lambda);
    let grow = a.norm_inf().max(1.0);
    let mut w = v.to_vec();
    for r in 1..=s.n() + 1 {
        w = a.vec_mul(&w);
        if max_abs(&w) <= KERNEL_TOL * scale * grow.powi(r as i32) {
            return Ok(r);
        }
    }
    Err(SpectralError::Precondition(format!(
        "vector is not in ker(T - λI)^r for any r ≤ {}",
        s.n() + 1
    )))
}
