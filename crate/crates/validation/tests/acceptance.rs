//! Acceptance criteria, one printed line each.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refinable::diffeq::{fundamental_determinant, RootData};
use refinable::evaluate::{evaluate_phi, homogeneity_residual, monomial_deviation, span_fit_residual, test_points, Dyadic};
use refinable::extension::Restriction;
use refinable::linalg::{eigenvalues, QMatrix};
use refinable::spectral::{minimal_order, spectrum_exact, Verdict};
use refinable::suite::{analyze, Analysis};
use refinable::Mask;

const LEVEL: u32 = 12;
const SEED: u64 = 20_240_601;

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bspline() -> Mask {
    Mask::from_ratios(&[(1, 4), (3, 4), (3, 4), (1, 4)]).unwrap()
}

fn d4() -> Mask {
    let s = 3f64.sqrt();
    Mask::from_real(&[(1.0 + s) / 4.0, (3.0 + s) / 4.0, (3.0 - s) / 4.0, (1.0 - s) / 4.0]).unwrap()
}

fn thirds() -> Mask {
    Mask::from_ratios(&[(1, 3), (2, 3), (2, 3), (1, 3)]).unwrap()
}

fn dependent() -> Mask {
    Mask::from_ratios(&[(1, 2), (1, 2), (1, 2), (1, 2)]).unwrap()
}

/// `c(z) = (1 + z) q(z)` with `q(1) = 1` and small integer numerators, so
/// both sum rules hold; `N` cycles through 1..=9.
///
/// Draws are kept when `φ` is well defined and bounded: the integer values
/// are determined, and every eigenvalue of `T` other than 1 has modulus
/// below 1.
fn random_masks(count: usize) -> Vec<Mask> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count)
        .map(|i| {
            let n = 1 + i % 9;
            loop {
                let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=6)).collect();
                let total: i64 = a.iter().sum();
                if a[0] == 0 || a[n - 1] == 0 || total == 0 {
                    continue;
                }
                let mut coef = vec![BigRational::zero(); n + 1];
                for (k, ak) in a.iter().enumerate() {
                    let v = q(*ak, total);
                    coef[k] += v.clone();
                    coef[k + 1] += v;
                }
                let m = Mask::from_rationals(coef).unwrap().with_name(format!("random-{i}"));
                let eig = eigenvalues(m.scale_matrices().t());
                let inside = eig.iter().all(|z| (z - c(1.0)).norm() < 1e-9 || z.norm() < 1.0 - 1e-9);
                if inside && evaluate_phi(&m, 0).is_ok() {
                    break m;
                }
            }
        })
        .collect()
}

/// Rank over ℚ by plain row reduction; independent of the library's oracle.
fn rational_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let top = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let f = &row[col] / &top[col];
                for (x, t) in row[col..].iter_mut().zip(&top[col..]) {
                    *x -= &f * t;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn rational_t(c: &[BigRational]) -> Vec<Vec<BigRational>> {
    let n = c.len() as i64;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let t = 2 * i - j;
                    if (0..n).contains(&t) {
                        c[t as usize].clone()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect()
}

fn matmul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).fold(BigRational::zero(), |s, k| s + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

fn shift(a: &[Vec<BigRational>], l: &BigRational) -> Vec<Vec<BigRational>> {
    let mut out = a.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= l;
    }
    out
}

fn sampled(a: &Analysis, i: usize, lo: i64, hi: i64) -> Vec<Complex64> {
    (lo..hi).map(|m| a.basis[i].value(Dyadic::new(m, LEVEL)).unwrap()).collect()
}

#[test]
fn criterion_1_bspline() {
    let m = bspline();
    let a = analyze(&m, LEVEL, (-1.0, 1.0)).unwrap();
    let t0 = a.scale.exact.as_ref().unwrap().t0.clone();
    let roots = spectrum_exact(&t0);
    let mut got: Vec<BigRational> = roots.iter().filter_map(|r| r.exact.clone()).collect();
    got.sort();
    let want = vec![q(1, 4), q(1, 2), q(1, 1)];
    let eig_ok = got == want && roots.iter().all(|r| r.multiplicity == 1);
    let acc = a.spectral.accuracy.n;
    let unit = 1i64 << LEVEL;
    let mut worst: f64 = 0.0;
    for s in 0..3 {
        let g = &a.basis[s].samples;
        worst = worst.max(monomial_deviation(g, s, 0.0, 1.0));
    }
    // literal monomials as the independent oracle
    let mono: Vec<Vec<Complex64>> = (0..3)
        .map(|s| (0..=unit).map(|m| c((m as f64 / unit as f64).powi(s))).collect())
        .collect();
    for s in 0..3 {
        let h = vec![sampled(&a, s, 0, unit + 1)];
        worst = worst.max(span_fit_residual(&h, &mono[s..s + 1]));
    }
    let ok = eig_ok && acc == 3 && worst <= 1e-8;
    let got: Vec<String> = got.iter().map(|q| q.to_string()).collect();
    report(1, ok, format!("T0 eigenvalues {got:?} exact, accuracy {acc}, monomial deviation {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_2_d4() {
    let m = d4();
    let a = analyze(&m, LEVEL, (-1.0, 1.0)).unwrap();
    let s3 = 3f64.sqrt();
    let c0 = c((1.0 + s3) / 4.0);
    let t0 = a.scale.float.t0.clone();
    let eig_err = eigenvalues(&t0).iter().map(|z| (z - c0).norm()).fold(f64::INFINITY, f64::min);
    let acc = a.spectral.accuracy.n;
    let unit = 1i64 << LEVEL;
    let hc0 = a
        .basis
        .iter()
        .position(|h| (h.lambda - c0).norm() < 1e-10)
        .expect("c_0 function");
    let first: Vec<Vec<Complex64>> = (0..3).map(|i| sampled(&a, i, 1, unit)).collect();
    let reference = vec![
        (1..unit).map(|_| c(1.0)).collect(),
        (1..unit).map(|m| c(m as f64 / unit as f64)).collect(),
        sampled(&a, hc0, 1, unit),
    ];
    let fit = span_fit_residual(&first, &reference).max(span_fit_residual(&reference, &first));
    let h = &a.basis[hc0];
    let hom = homogeneity_residual(h, h.lambda, 1, &test_points(h, 1)).unwrap() / h.samples.max_abs();
    let ok = acc == 2 && eig_err <= 1e-10 && fit <= 1e-6 && hom <= 1e-8;
    report(
        2,
        ok,
        format!("accuracy {acc}, |eig - c0| {eig_err:.2e}, cross-fit {fit:.2e}, h_c0 homogeneity {hom:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_thirds() {
    let m = thirds();
    let a = analyze(&m, LEVEL, (-1.0, 1.0)).unwrap();
    let acc = a.spectral.accuracy.n;
    let spec = a.spectral.spectrum();
    let third = c(1.0 / 3.0);
    let spec_ok = spec.len() == 2
        && (spec[0].0 - c(1.0)).norm() < 1e-12
        && spec[0].1 == 1
        && (spec[1].0 - third).norm() < 1e-12
        && spec[1].1 == 3;
    // chain lengths from ranks of (T - I/3)^k by independent row reduction
    let t = rational_t(m.exact_coefficients().unwrap());
    let a1 = shift(&t, &q(1, 3));
    let a2 = matmul(&a1, &a1);
    let (r1, r2) = (rational_rank(a1.clone()), rational_rank(a2));
    let longest_two = (4 - r1) < (4 - r2);
    let lib_lengths = a.spectral.groups[1].chain_lengths();
    let h = a.basis.iter().find(|h| h.order == 2).expect("order-2 function");
    let row = h.basis_row.unwrap();
    let order = minimal_order(a.spectral.b.row(row), &a.scale, h.lambda).unwrap();
    let scale = h.samples.max_abs();
    let r2res = homogeneity_residual(h, h.lambda, 2, &test_points(h, 2)).unwrap() / scale;
    let r1res = homogeneity_residual(h, h.lambda, 1, &test_points(h, 1)).unwrap();
    let spec: Vec<String> = spec.iter().map(|(l, k)| format!("{:.6} x{k}", l.re)).collect();
    let ok = acc == 1 && spec_ok && longest_two && lib_lengths.contains(&2) && order == 2 && r2res <= 1e-8 && r1res > 1e-3;
    report(
        3,
        ok,
        format!(
            "accuracy {acc}, spectrum {spec:?}, chains {lib_lengths:?} (rank oracle {r1},{r2}), order {order}, residual r=2 {r2res:.2e}, r=1 {r1res:.2e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_dependent() {
    let m = dependent();
    let a = analyze(&m, LEVEL, (-1.0, 1.0)).unwrap();
    let ind = &a.independence;
    let y = &a.kernel[0];
    let yw = y.window(-6..6).unwrap();
    let alternating = yw
        .iter()
        .zip(-6i64..)
        .all(|(v, k)| (v - yw[0] * if k % 2 == 0 { 1.0 } else { -1.0 }).norm() <= 1e-12 * yw[0].norm());
    let ym = y.restrict(Restriction::Middle, 3).unwrap();
    let dep = refinable::evaluate::verify_dependency(&a.evaluation, y, -1..4).unwrap();
    let rel = dep / a.evaluation.max_abs() / yw[0].norm();
    let verdict = ind.verdict.to_string();
    let ok = ind.kernel_dim == 1
        && ind.gcd_degree == 1
        && a.kernel.len() == 1
        && alternating
        && ym.len() == 2
        && rel <= 1e-8
        && ind.verdict == Verdict::Dependent
        && verdict == "translates DEPENDENT";
    report(
        4,
        ok,
        format!(
            "dim ker M {}, deg gcd {}, alternating {alternating}, dependency residual {rel:.2e}, verdict \"{verdict}\"",
            ind.kernel_dim, ind.gcd_degree
        ),
    );
    assert!(ok);
}

fn corpus() -> Vec<Mask> {
    let mut v = vec![
        bspline().with_name("bspline3"),
        d4().with_name("d4"),
        thirds().with_name("thirds"),
        dependent().with_name("dependent"),
    ];
    v.extend(random_masks(50));
    v
}

/// Printed closed form against the direct determinant for simple roots.
fn determinant_as_printed(trials: usize) -> (usize, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut agree = 0;
    let mut confluent_agree = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = rng.gen_range(1..=5);
        let roots: Vec<Complex64> = loop {
            let r: Vec<Complex64> = (0..h)
                .map(|_| Complex64::from_polar(rng.gen_range(0.3..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            if r.iter().enumerate().all(|(i, a)| r[..i].iter().all(|b| (a - b).norm() >= 0.1)) {
                break r;
            }
        };
        let rep = fundamental_determinant(&RootData::new(roots.iter().map(|d| (*d, 1)).collect()).unwrap());
        let scale = rep.direct.norm().max(1e-300);
        let err = (rep.direct - rep.as_printed).norm() / scale;
        worst = worst.max(err);
        if err <= 1e-8 {
            agree += 1;
        }
        if (rep.direct - rep.confluent).norm() <= 1e-8 * scale {
            confluent_agree += 1;
        }
    }
    (agree, confluent_agree, worst)
}

#[test]
fn criterion_5_property_suites() {
    // the suites named by the criterion; every other check is reported but not counted
    const SUITES: [&str; 8] = [
        "refinement identity",
        "vector refinement",
        "h-refinement",
        "kernel transfer",
        "eigen-extension round trip",
        "dim ker M",
        "subdivision vs",
        "h(0) = 0",
    ];
    let mut failures = Vec::new();
    let mut other = Vec::new();
    let mut total = 0;
    let masks = corpus();
    for m in &masks {
        let name = m.name().unwrap_or("?").to_string();
        match analyze(m, LEVEL, (-1.0, 1.0)) {
            Ok(a) => {
                for ch in a.checks(None) {
                    let counted = SUITES.iter().any(|s| ch.name.starts_with(s)) || ch.name.starts_with("kernel sequence");
                    total += counted as usize;
                    if !ch.passed {
                        let line = format!("{name}: {} = {:.3e} (bound {:.1e})", ch.name, ch.value, ch.tolerance);
                        if counted {
                            failures.push(line);
                        } else {
                            other.push(line);
                        }
                    }
                }
            }
            Err(e) => failures.push(format!("{name}: analysis failed: {e}")),
        }
    }
    let trials = 200;
    let (agree, confluent, worst) = determinant_as_printed(trials);
    let det_ok = agree == trials;
    let ok = failures.is_empty() && det_ok;
    report(
        5,
        ok,
        format!(
            "{} masks, {total} checks, {} failed; determinant as printed for simple roots agrees in {agree}/{trials} (worst relative gap {worst:.2e}; confluent form agrees in {confluent}/{trials})",
            masks.len(),
            failures.len()
        ),
    );
    for f in &failures {
        println!("  {f}");
    }
    for f in &other {
        println!("  (outside the criterion) {f}");
    }
    assert!(ok);
}

#[test]
fn criterion_6_dimension() {
    let mut bad = Vec::new();
    let mut counted = 0;
    for m in corpus() {
        let name = m.name().unwrap_or("?").to_string();
        let a = match analyze(&m, 10, (-1.0, 1.0)) {
            Ok(a) => a,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        if !a.independence.m_invertible {
            continue;
        }
        counted += 1;
        let n = m.n();
        let ext = a.extendable_count();
        let ratio = a.gram_ratio();
        if ext != n + 1 || ratio <= 1e-8 || a.basis.len() != n + 1 {
            bad.push(format!("{name}: {ext} extendable of {}, Gram ratio {ratio:.2e}", n + 1));
        }
    }
    let ok = bad.is_empty();
    report(6, ok, format!("{counted} masks with invertible M, {} failures", bad.len()));
    for b in &bad {
        println!("  {b}");
    }
    assert!(ok);
}

#[test]
fn random_corpus_is_well_formed() {
    let masks = random_masks(50);
    assert_eq!(masks.len(), 50);
    for m in &masks {
        let c = m.exact_coefficients().unwrap();
        let even = c.iter().step_by(2).fold(BigRational::zero(), |s, x| s + x);
        let odd = c.iter().skip(1).step_by(2).fold(BigRational::zero(), |s, x| s + x);
        assert!(even.is_one() && odd.is_one());
        assert!(!c[0].is_zero() && !c[c.len() - 1].abs().is_zero());
        assert!((1..=9).contains(&m.n()));
    }
    let _: QMatrix = refinable::linalg::Mat::identity(1);
}
