use std::fs;
use std::path::PathBuf;

use assert_cmd::Command;
use serde_json::Value;
use tempfile::tempdir;

fn mask(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../masks").join(format!("{name}.json"))
}

fn refinable() -> Command {
    Command::cargo_bin("refinable").unwrap()
}

fn json(out: &[u8]) -> Value {
    serde_json::from_slice(out).expect("report is JSON")
}

fn read_csv(text: &str) -> Vec<(f64, f64, f64)> {
    let mut lines = text.split('\n');
    assert_eq!(lines.next(), Some("x,re,im"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn spectrum_bspline_lists_t_eigenvalues() {
    let out = refinable().arg("spectrum").arg(mask("bspline3")).assert().success();
    let r = json(&out.get_output().stdout);
    let eig: Vec<&str> = r["spectrum"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["exact"].as_str().unwrap())
        .collect();
    // {c_0, c_N} ∪ eig(M) = {1/4, 1/4} ∪ {1, 1/2}
    assert_eq!(eig, ["1", "1/2", "1/4", "1/4"]);
    assert_eq!(r["accuracy"]["n"], 3);
    assert_eq!(r["spectrum"]["backend"], "exact");
}

#[test]
fn spectrum_d4_accuracy_two() {
    let out = refinable().arg("spectrum").arg(mask("d4")).assert().success();
    let r = json(&out.get_output().stdout);
    assert_eq!(r["accuracy"]["n"], 2);
    assert_eq!(r["spectrum"]["backend"], "float");
}

#[test]
fn spectrum_writes_out_file() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("s.json");
    refinable()
        .args(["spectrum", "--out"])
        .arg(&path)
        .arg(mask("haar"))
        .assert()
        .success()
        .stdout("");
    let r: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["mask"]["n"], 1);
}

#[test]
fn malformed_mask_is_input_error() {
    let dir = tempdir().unwrap();
    for (i, text) in ["{\"coefficients\": [1, \"x/2\"]}", "not json", "{\"coefficients\": [0, 1, 1]}"]
        .iter()
        .enumerate()
    {
        let path = dir.path().join(format!("bad{i}.json"));
        fs::write(&path, text).unwrap();
        refinable().arg("spectrum").arg(&path).assert().code(2);
    }
    refinable().args(["spectrum", "/nonexistent/mask.json"]).assert().code(2);
}

#[test]
fn eigenvalue_one_failure_is_surfaced() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"coefficients": ["1/2", "1/2", "1/2"]}"#).unwrap();
    let out = refinable().arg("verify").arg(&path).assert().code(2);
    let err = String::from_utf8(out.get_output().stderr.clone()).unwrap();
    assert!(err.contains("1 is not an eigenvalue of T"), "{err}");
}

#[test]
fn basis_bspline_reproduces_monomials() {
    let dir = tempdir().unwrap();
    refinable()
        .args(["basis", "--level", "8", "--out"])
        .arg(dir.path())
        .arg(mask("bspline3"))
        .assert()
        .success();
    for f in ["h0.csv", "h1.csv", "h2.csv", "h3.csv", "phi.csv", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    for s in 0..3 {
        let text = fs::read_to_string(dir.path().join(format!("h{s}.csv"))).unwrap();
        assert!(!text.contains('\r'));
        let pts: Vec<(f64, f64)> = read_csv(&text)
            .into_iter()
            .filter(|p| (0.0..=1.0).contains(&p.0))
            .map(|(x, re, _)| (x.powi(s), re))
            .collect();
        let scale = pts.iter().map(|(m, h)| m * h).sum::<f64>() / pts.iter().map(|(m, _)| m * m).sum::<f64>();
        let dev = pts.iter().map(|(m, h)| (h - scale * m).abs()).fold(0.0, f64::max);
        let top = pts.iter().map(|(_, h)| h.abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-8 * top, "h{s}: {dev}");
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["basis"][0]["file"], "h0.csv");
    assert_eq!(r["passed"], true);
}

#[test]
fn basis_interval_bounds_the_samples() {
    let dir = tempdir().unwrap();
    refinable()
        .args(["basis", "--level", "4", "--interval", "-0.5", "0.25", "--out"])
        .arg(dir.path())
        .arg(mask("bspline3"))
        .assert()
        .success();
    let pts = read_csv(&fs::read_to_string(dir.path().join("h1.csv")).unwrap());
    assert_eq!(pts.first().unwrap().0, -0.5);
    assert_eq!(pts.last().unwrap().0, 0.25);
    assert_eq!(pts.len(), 13);
}

#[test]
fn basis_jordan_mask_has_order_two() {
    let dir = tempdir().unwrap();
    let out = refinable()
        .args(["basis", "--level", "10", "--out"])
        .arg(dir.path())
        .arg(mask("jordan13"))
        .assert()
        .success();
    let r = json(&out.get_output().stdout);
    let orders: Vec<u64> = r["basis"].as_array().unwrap().iter().map(|b| b["order"].as_u64().unwrap()).collect();
    assert_eq!(orders.iter().filter(|&&o| o == 2).count(), 1);
}

#[test]
fn basis_level_zero_samples_integers() {
    let dir = tempdir().unwrap();
    refinable()
        .args(["basis", "--level", "0", "--out"])
        .arg(dir.path())
        .arg(mask("bspline3"))
        .assert()
        .success();
    let phi = read_csv(&fs::read_to_string(dir.path().join("phi.csv")).unwrap());
    let xs: Vec<f64> = phi.iter().map(|p| p.0).collect();
    assert_eq!(xs, [0.0, 1.0, 2.0, 3.0]);
    assert_eq!(phi[1].1, 0.5);
}

#[test]
fn verify_passes_on_reference_masks() {
    for m in ["bspline3", "d4", "jordan13", "haar"] {
        let out = refinable().args(["verify", "--level", "10"]).arg(mask(m)).assert().success();
        assert_eq!(json(&out.get_output().stdout)["passed"], true, "{m}");
    }
}

#[test]
fn verify_dependent_reports_kernel_sequence() {
    let out = refinable().args(["verify", "--level", "10"]).arg(mask("dependent")).assert().success();
    let r = json(&out.get_output().stdout);
    assert_eq!(r["independence"]["verdict"], "translates DEPENDENT");
    assert_eq!(r["independence"]["kernel_dim"], 1);
    let dep = r["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().contains("dependency residual"))
        .expect("dependency residual reported");
    assert_eq!(dep["passed"], true);
}

#[test]
fn verify_fails_under_tight_tolerance() {
    let out = refinable()
        .args(["verify", "--level", "8", "--tolerance", "1e-30"])
        .arg(mask("d4"))
        .assert()
        .code(1);
    let err = String::from_utf8(out.get_output().stderr.clone()).unwrap();
    assert!(err.contains("FAILED"));
    assert_eq!(json(&out.get_output().stdout)["passed"], false);
}

#[test]
fn exact_flag_reads_doubles_as_rationals() {
    // the doubles of D4 are not an exact mask, so 1 is no longer an eigenvalue
    refinable().args(["verify", "--exact"]).arg(mask("d4")).assert().code(2);
    let out = refinable().args(["spectrum", "--exact"]).arg(mask("haar")).assert().success();
    assert_eq!(json(&out.get_output().stdout)["spectrum"]["backend"], "exact");
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let run = |dir: &std::path::Path| {
        refinable()
            .args(["basis", "--level", "9", "--out"])
            .arg(dir)
            .arg(mask("d4"))
            .assert()
            .success()
            .get_output()
            .stdout
            .clone()
    };
    assert_eq!(run(a.path()), run(b.path()));
    for f in ["h0.csv", "h2.csv", "phi.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn floats_have_seventeen_digits() {
    let out = refinable().arg("spectrum").arg(mask("jordan13")).assert().success();
    let text = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    assert!(text.contains("3.3333333333333331e-1"), "{text}");
}
