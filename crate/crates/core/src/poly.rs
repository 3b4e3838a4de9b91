//! Univariate polynomials with coefficients stored low degree first.
//!
//! Two flavors: exact over `BigRational` (Euclid, square-free
//! decomposition, rational roots) and approximate over `Complex64`
//! (companion-matrix roots, Sylvester-rank gcd).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{eigenvalues, lstsq, rational_to_f64, CMatrix, FloatOracle, RankOracle};

/// A root together with its multiplicity. `exact` is set when the root is a
/// rational number verified by exact evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub exact: Option<BigRational>,
    pub multiplicity: usize,
}

// ---------------------------------------------------------------------------
// exact

pub fn trim_exact(p: &[BigRational]) -> Vec<BigRational> {
    let mut v = p.to_vec();
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

/// Degree, `None` for the zero polynomial.
pub fn degree_exact(p: &[BigRational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn eval_exact(p: &[BigRational], x: &BigRational) -> BigRational {
    p.iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * x + c)
}

pub fn derivative_exact(p: &[BigRational]) -> Vec<BigRational> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
        .collect()
}

pub fn monic_exact(p: &[BigRational]) -> Vec<BigRational> {
    let p = trim_exact(p);
    match p.last() {
        Some(lead) => {
            let inv = lead.recip();
            p.iter().map(|c| c * &inv).collect()
        }
        None => p,
    }
}

fn sub_exact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    trim_exact(
        &(0..n)
            .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
            .collect::<Vec<_>>(),
    )
}

pub fn mul_exact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim_exact(&out)
}

/// Quotient and remainder. Panics on division by the zero polynomial.
pub fn div_rem_exact(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let b = trim_exact(b);
    let db = degree_exact(&b).expect("division by zero polynomial");
    let mut r = trim_exact(a);
    let lead_inv = b[db].recip();
    let mut q = vec![BigRational::zero(); r.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree_exact(&r) {
        if dr < db {
            break;
        }
        let f = &r[dr] * &lead_inv;
        let shift = dr - db;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &f * c;
        }
        q[shift] = f;
        r = trim_exact(&r);
    }
    (trim_exact(&q), r)
}

/// Monic gcd by Euclid. `gcd(0, 0)` is the zero polynomial.
pub fn gcd_exact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut x = monic_exact(a);
    let mut y = monic_exact(b);
    while degree_exact(&y).is_some() {
        let (_, r) = div_rem_exact(&x, &y);
        x = y;
        y = monic_exact(&r);
    }
    x
}

/// Square-free decomposition (Yun): returns `(g_i, i)` with `p = lead * Π g_i^i`,
/// each `g_i` monic, square-free, pairwise coprime and non-constant.
pub fn squarefree_exact(p: &[BigRational]) -> Vec<(Vec<BigRational>, usize)> {
    let f = monic_exact(p);
    if degree_exact(&f).is_none_or(|d| d == 0) {
        return Vec::new();
    }
    let fp = derivative_exact(&f);
    let a0 = gcd_exact(&f, &fp);
    let mut b = div_rem_exact(&f, &a0).0;
    let c = div_rem_exact(&fp, &a0).0;
    let mut d = sub_exact(&c, &derivative_exact(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree_exact(&b).is_some_and(|deg| deg > 0) {
        let a = gcd_exact(&b, &d);
        if degree_exact(&a).is_some_and(|deg| deg > 0) {
            out.push((a.clone(), i));
        }
        let nb = div_rem_exact(&b, &a).0;
        let nc = div_rem_exact(&d, &a).0;
        d = sub_exact(&nc, &derivative_exact(&nb));
        b = nb;
        i += 1;
    }
    out
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
fn convergents(x: f64, max_den: i128) -> Vec<(i128, i128)> {
    let mut out = Vec::new();
    if !x.is_finite() || x.abs() > 1e15 {
        return out;
    }
    let (mut h2, mut h1) = (0i128, 1i128);
    let (mut k2, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i128;
        let h = ai.checked_mul(h1).and_then(|v| v.checked_add(h2));
        let k = ai.checked_mul(k1).and_then(|v| v.checked_add(k2));
        let (Some(h), Some(k)) = (h, k) else { break };
        if k > max_den {
            break;
        }
        out.push((h, k));
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
        (h2, h1, k2, k1) = (h1, h, k1, k);
    }
    out
}

fn rational_candidates(x: f64) -> Vec<BigRational> {
    let mut c: Vec<BigRational> = convergents(x, 1_000_000_000_000)
        .into_iter()
        .map(|(h, k)| BigRational::new(BigInt::from(h), BigInt::from(k)))
        .collect();
    if let Some(q) = BigRational::from_float(x) {
        c.push(q);
    }
    c
}

/// Roots of a polynomial with rational coefficients.
///
/// Multiplicities are exact (square-free decomposition). Rational roots are
/// detected from floating approximations and confirmed by exact evaluation;
/// all other roots are returned in floating point only.
pub fn roots_exact(p: &[BigRational]) -> Vec<Root> {
    let mut out = Vec::new();
    for (factor, mult) in squarefree_exact(p) {
        let mut rest = factor;
        let approx = roots_simple(&to_complex(&rest));
        let mut irrational = Vec::new();
        for z in approx {
            let scale = z.norm().max(1.0);
            let mut found = None;
            if z.im.abs() <= 1e-6 * scale {
                for cand in rational_candidates(z.re) {
                    let near = (rational_to_f64(&cand) - z.re).abs() <= 1e-6 * scale;
                    if near && eval_exact(&rest, &cand).is_zero() {
                        found = Some(cand);
                        break;
                    }
                }
            }
            match found {
                Some(q) => {
                    let lin = vec![-q.clone(), BigRational::one()];
                    rest = div_rem_exact(&rest, &lin).0;
                    out.push(Root {
                        value: Complex64::new(rational_to_f64(&q), 0.0),
                        exact: Some(q),
                        multiplicity: mult,
                    });
                }
                None => irrational.push(z),
            }
        }
        if degree_exact(&rest).is_some_and(|d| d > 0) {
            // recompute on the deflated factor so the values are polished
            for z in roots_simple(&to_complex(&rest)) {
                out.push(Root {
                    value: z,
                    exact: None,
                    multiplicity: mult,
                });
            }
        }
        debug_assert!(irrational.len() >= degree_exact(&rest).unwrap_or(0));
    }
    out
}

pub fn to_complex(p: &[BigRational]) -> Vec<Complex64> {
    p.iter()
        .map(|c| Complex64::new(rational_to_f64(c), 0.0))
        .collect()
}

/// Rational root test against a candidate, for callers that want exactness.
pub fn is_exact_root(p: &[BigRational], x: &BigRational) -> bool {
    eval_exact(p, x).is_zero()
}

/// Integer-power helper used by display code.
pub fn rational_display(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_abs_cmp(a: &BigRational, b: &BigRational) -> std::cmp::Ordering {
    a.abs().cmp(&b.abs())
}

pub fn rational_to_i64(q: &BigRational) -> Option<i64> {
    if q.denom().is_one() {
        q.numer().to_i64()
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// floating

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Drops trailing coefficients that are at most `rel * max|c|`.
pub fn trim_float(p: &[Complex64], rel: f64) -> Vec<Complex64> {
    let max = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut v = p.to_vec();
    while v.last().is_some_and(|c| c.norm() <= rel * max) {
        v.pop();
    }
    v
}

pub fn eval_float(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().rev().fold(czero(), |acc, c| acc * x + c)
}

fn derivative_float(p: &[Complex64]) -> Vec<Complex64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

pub fn monic_float(p: &[Complex64]) -> Vec<Complex64> {
    match p.last() {
        Some(lead) if lead.norm() > 0.0 => p.iter().map(|c| c / lead).collect(),
        _ => p.to_vec(),
    }
}

/// Companion-matrix roots, Newton-polished. Intended for square-free input.
pub fn roots_simple(p: &[Complex64]) -> Vec<Complex64> {
    let p = monic_float(&trim_float(p, 0.0));
    let n = p.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let comp = CMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -p[i]
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            czero()
        }
    });
    let dp = derivative_float(&p);
    eigenvalues(&comp)
        .into_iter()
        .map(|mut z| {
            for _ in 0..8 {
                let f = eval_float(&p, z);
                let d = eval_float(&dp, z);
                if d.norm() == 0.0 {
                    break;
                }
                let next = z - f / d;
                if !next.is_finite() || eval_float(&p, next).norm() >= f.norm() {
                    break;
                }
                z = next;
            }
            z
        })
        .collect()
}

/// Roots with multiplicities from companion eigenvalues clustered at relative
/// tolerance `rel_tol`; each cluster reports its mean.
pub fn roots_float(p: &[Complex64], rel_tol: f64) -> Vec<Root> {
    let p = trim_float(p, 0.0);
    let n = p.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let pm = monic_float(&p);
    let comp = CMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -pm[i]
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            czero()
        }
    });
    cluster(&eigenvalues(&comp), rel_tol)
        .into_iter()
        .map(|(value, multiplicity)| Root {
            value,
            exact: None,
            multiplicity,
        })
        .collect()
}

/// Single-linkage clustering: points closer than `rel_tol * max(1, |z|)` join.
/// Returns each cluster's mean and size.
pub fn cluster(values: &[Complex64], rel_tol: f64) -> Vec<(Complex64, usize)> {
    cluster_members(values, rel_tol)
        .into_iter()
        .map(|g| (mean(&g), g.len()))
        .collect()
}

pub fn mean(values: &[Complex64]) -> Complex64 {
    values.iter().sum::<Complex64>() / values.len() as f64
}

/// Like [`cluster`], returning the members in input order.
pub fn cluster_members(values: &[Complex64], rel_tol: f64) -> Vec<Vec<Complex64>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = values[i].norm().max(values[j].norm()).max(1.0);
            if (values[i] - values[j]).norm() <= rel_tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(v),
            None => groups.push((r, vec![v])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Matrix of `(x, y) ↦ a·x + b·y` with `deg x < dx`, `deg y < dy`.
fn sylvester(a: &[Complex64], b: &[Complex64], dx: usize, dy: usize) -> CMatrix {
    let rows = (a.len() + dx - 1).max(b.len() + dy - 1);
    CMatrix::from_fn(rows, dx + dy, |i, j| {
        let (p, shift) = if j < dx { (a, j) } else { (b, j - dx) };
        i.checked_sub(shift)
            .and_then(|k| p.get(k).copied())
            .unwrap_or_else(czero)
    })
}

/// Monic gcd in floating point.
///
/// The degree is the rank deficiency of the Sylvester matrix with singular
/// value cutoff `rel_tol * ‖S‖`; the gcd is then recovered from the cofactor
/// null vector of the reduced Sylvester matrix.
pub fn gcd_float(a: &[Complex64], b: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let a = trim_float(a, 1e-14);
    let b = trim_float(b, 1e-14);
    if b.is_empty() {
        return monic_float(&a);
    }
    if a.is_empty() {
        return monic_float(&b);
    }
    let (m, n) = (a.len() - 1, b.len() - 1);
    if m == 0 || n == 0 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let s = sylvester(&a, &b, n, m);
    let oracle = FloatOracle::new(rel_tol, 0.0);
    let ell = oracle.nullspace(&s).len();
    if ell == 0 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    // a·x + b·y = 0 with deg x ≤ n-ell, deg y ≤ m-ell forces y ∝ -a/g.
    let reduced = sylvester(&a, &b, n - ell + 1, m - ell + 1);
    let sv = crate::linalg::singular_values(&reduced);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let ns = FloatOracle::new(1e-6, smax).nullspace(&reduced);
    let Some(null) = ns.first() else {
        return vec![Complex64::new(1.0, 0.0)];
    };
    let cof_a: Vec<Complex64> = null[n - ell + 1..].iter().map(|c| -c).collect();
    // a = cof_a * g, solve for g of degree ell
    let conv = CMatrix::from_fn(a.len(), ell + 1, |i, j| {
        i.checked_sub(j)
            .and_then(|k| cof_a.get(k).copied())
            .unwrap_or_else(czero)
    });
    monic_float(&lstsq(&conv, &a))
}
