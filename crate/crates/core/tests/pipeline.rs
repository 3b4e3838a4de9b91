use num_complex::Complex64;
use refinable::evaluate::{evaluate_phi, Dyadic, EvalError};
use refinable::extension::{eigen_extend, kernel_of_l};
use refinable::spectral::{eigen_structure, independence_test, Verdict};
use refinable::suite::analyze;
use refinable::{parse_mask, Error};

fn load(name: &str) -> refinable::Mask {
    let path = format!("{}/../../masks/{name}.json", env!("CARGO_MANIFEST_DIR"));
    parse_mask(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_masks_pass_their_suites() {
    for name in ["bspline3", "d4", "jordan13", "dependent", "haar"] {
        let m = load(name);
        assert_eq!(m.name(), Some(name));
        let a = analyze(&m, 9, (-1.0, 1.0)).unwrap();
        for c in a.checks(None) {
            assert!(c.passed, "{name}: {} = {:e} vs {:e}", c.name, c.value, c.tolerance);
        }
    }
}

#[test]
fn hat_function_from_document() {
    let m = parse_mask(r#"{"coefficients": ["1/2", 1, "1/2"]}"#).unwrap();
    let e = evaluate_phi(&m, 6).unwrap();
    for k in 0..=128 {
        let x = k as f64 / 64.0;
        let want = 1.0 - (x - 1.0).abs();
        assert!((e.phi(Dyadic::new(k, 6)).unwrap().re - want).abs() < 1e-14);
    }
    let s = eigen_structure(&m.scale_matrices()).unwrap();
    assert_eq!(s.accuracy.n, 2);
}

#[test]
fn spectrum_contains_corner_entries() {
    // eig(T) = {c_0, c_N} ∪ eig(M)
    let m = load("d4");
    let s = eigen_structure(&m.scale_matrices()).unwrap();
    let c = m.coefficients();
    for corner in [c[0], c[3]] {
        assert!(s.spectrum().iter().any(|(l, _)| (l - corner).norm() < 1e-10));
    }
}

#[test]
fn dependent_kernel_annihilates_translates() {
    let m = load("dependent");
    let ind = independence_test(&m.scale_matrices(), &m.polynomials()).unwrap();
    assert_eq!(ind.verdict, Verdict::Dependent);
    let ker = kernel_of_l(&m);
    assert_eq!(ker.len(), 1);
    let y = &ker[0];
    assert!((y.get(1).unwrap() + y.get(0).unwrap()).norm() < 1e-12);
}

#[test]
fn extension_of_accuracy_vector_is_polynomial() {
    let m = load("bspline3");
    let s = eigen_structure(&m.scale_matrices()).unwrap();
    let v = s.accuracy.vector(1, 3);
    let y = eigen_extend(&v, None, &m, Complex64::new(0.5, 0.0), -10..10).unwrap();
    let p = |k: i64| v[1] * k as f64 + v[0] * (1 - k) as f64;
    for k in -10..10 {
        assert!((y.get(k).unwrap() - p(k)).norm() < 1e-9, "{k}");
    }
}

#[test]
fn mask_without_eigenvalue_one_is_rejected() {
    let m = parse_mask(r#"{"coefficients": ["1/2", "1/2", "1/2"]}"#).unwrap();
    assert!(matches!(
        analyze(&m, 4, (-1.0, 1.0)),
        Err(Error::Eval(EvalError::NotAnEigenvalue))
    ));
}
