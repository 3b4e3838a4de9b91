//! Full analysis of a mask and the invariant checks run on it.

use num_complex::Complex64;

use crate::evaluate::{
    build_homogeneous_basis, evaluate_phi, homogeneity_residual, monomial_deviation, polynomial_rows,
    reconstruct_phi, span_fit_residual, test_points, verify_dependency, Dyadic, HomogeneousFunction,
    RefinableEvaluation,
};
use crate::extension::{eigen_extend, kernel_of_l, materialize_l, subdivision, Restriction, SequenceWindow};
use crate::linalg::{max_abs, singular_values, CMatrix};
use crate::mask::{Mask, ScaleMatrices};
use crate::spectral::{
    eigen_structure, independence_test, kernel_lift, kernel_transfer, minimal_order, IndependenceReport,
    SpectralData, EIG_CLUSTER_TOL,
};
use crate::Error;

/// Level at which the sample Gram matrix is formed.
pub const GRAM_LEVEL: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One computed quantity compared against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            bound: Bound::AtMost,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            bound: Bound::AtLeast,
            passed: value >= tolerance,
        }
    }
}

/// Everything computed for one mask.
pub struct Analysis {
    pub mask: Mask,
    pub scale: ScaleMatrices,
    pub spectral: SpectralData,
    pub independence: IndependenceReport,
    pub kernel: Vec<SequenceWindow>,
    pub evaluation: RefinableEvaluation,
    /// Sampled on `[min(a, -1), max(b, 1)]`.
    pub basis: Vec<HomogeneousFunction>,
}

pub fn analyze(mask: &Mask, level: u32, interval: (f64, f64)) -> Result<Analysis, Error> {
    let scale = mask.scale_matrices();
    let spectral = eigen_structure(&scale)?;
    let independence = independence_test(&scale, &mask.polynomials())?;
    let kernel = kernel_of_l(mask);
    let evaluation = evaluate_phi(mask, level)?;
    let span = (interval.0.min(-1.0), interval.1.max(1.0));
    let basis = build_homogeneous_basis(&evaluation, &spectral, span)?;
    Ok(Analysis {
        mask: mask.clone(),
        scale,
        spectral,
        independence,
        kernel,
        evaluation,
        basis,
    })
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= EIG_CLUSTER_TOL * a.norm().max(b.norm()).max(1.0)
}

fn rel(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den.max(f64::MIN_POSITIVE)
    }
}

/// Sample rows at grid points `m / 2^level` with `m` in `ms`.
fn sample_rows(funcs: &[&HomogeneousFunction], ms: impl Iterator<Item = i64> + Clone, level: u32) -> Vec<Vec<Complex64>> {
    funcs
        .iter()
        .map(|h| ms.clone().map(|m| h.value(Dyadic::new(m, level)).unwrap()).collect())
        .collect()
}

impl Analysis {
    fn n(&self) -> usize {
        self.mask.n()
    }

    fn unit(&self) -> i64 {
        1i64 << self.evaluation.level()
    }

    /// `|Σ_k c_k φ(2x - k) - φ(x)|` over the grid on `[0, N]`, relative to `max |φ|`.
    pub fn refinement_residual(&self) -> f64 {
        let e = &self.evaluation;
        let c = self.mask.coefficients();
        let unit = self.unit();
        let g = e.finest();
        let worst = g
            .indices()
            .map(|m| {
                let rhs: Complex64 = c
                    .iter()
                    .enumerate()
                    .map(|(k, ck)| ck * e.phi_index(2 * m - k as i64 * unit))
                    .sum();
                (rhs - e.phi_index(m)).norm()
            })
            .fold(0.0, f64::max);
        rel(worst, e.max_abs())
    }

    /// `φ⁰(x) = T φ⁰(2x)` on grid points of `(-1/2, 1/2)`.
    pub fn vector_refinement_residual(&self) -> f64 {
        let e = &self.evaluation;
        let t = self.scale.t();
        let level = e.level();
        let half = self.unit() / 2;
        let worst = (-half + 1..half.max(1))
            .map(|m| {
                let lhs = e.phi0(Dyadic::new(m, level)).unwrap();
                let rhs = t.mul_vec(&e.phi0(Dyadic::new(2 * m, level)).unwrap());
                lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        rel(worst, e.max_abs())
    }

    /// `h(x) = B T B⁻¹ h(2x)` on grid points of `(-1/2, 1/2)`.
    pub fn h_refinement_residual(&self) -> Option<f64> {
        let b = &self.spectral.b;
        let c = b.matmul(self.scale.t()).matmul(&b.try_inverse()?);
        let level = self.evaluation.level();
        let half = self.unit() / 2;
        let at = |m: i64| -> Vec<Complex64> {
            self.basis
                .iter()
                .map(|h| h.value(Dyadic::new(m, level)).unwrap())
                .collect()
        };
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for m in -half + 1..half.max(1) {
            let lhs = at(m);
            let rhs = c.mul_vec(&at(2 * m));
            scale = scale.max(max_abs(&lhs));
            worst = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
        }
        Some(rel(worst, scale))
    }

    /// Max `|h(0)|` over basis functions with `λ ≠ 1`.
    pub fn origin_residual(&self) -> f64 {
        self.basis
            .iter()
            .filter(|h| !close(h.lambda, Complex64::new(1.0, 0.0)))
            .map(|h| h.value(Dyadic::new(0, 0)).unwrap().norm())
            .fold(0.0, f64::max)
    }

    /// Relative homogeneity residual of `h` at order `r` on `[-1, 1]`.
    pub fn homogeneity(&self, h: &HomogeneousFunction, r: usize) -> f64 {
        let unit = self.unit();
        let pts: Vec<Dyadic> = test_points(h, r as u32)
            .into_iter()
            .filter(|d| d.at_level(h.samples.level).is_some_and(|m| m.abs() <= unit))
            .collect();
        let res = homogeneity_residual(h, h.lambda, r, &pts).unwrap_or(f64::INFINITY);
        // an h that vanishes identically is measured against |v| max|φ|
        rel(res, h.samples.max_abs().max(max_abs(&h.row) * self.evaluation.max_abs()))
    }

    /// Mutual fit of `{h_i}` (all rows but the `e_N` row) and
    /// `{φ(x + k)}_{k<N}` over grid points of `(0, 1)`.
    pub fn local_span_residual(&self) -> f64 {
        let level = self.evaluation.level();
        let unit = self.unit();
        let skip = self.spectral.convention_rows.last;
        let hs: Vec<&HomogeneousFunction> = self
            .basis
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, h)| h)
            .collect();
        let ms = 1..unit;
        let hrows = sample_rows(&hs, ms.clone(), level);
        let phis: Vec<Vec<Complex64>> = (0..self.n() as i64)
            .map(|k| ms.clone().map(|m| self.evaluation.phi_index(m + k * unit)).collect())
            .collect();
        span_fit_residual(&hrows, &phis).max(span_fit_residual(&phis, &hrows))
    }

    /// `σ_min / σ_max` of the Gram matrix of unit-norm basis samples on `[-1, 1]`
    /// at [`GRAM_LEVEL`].
    pub fn gram_ratio(&self) -> f64 {
        let level = self.evaluation.level();
        let coarse = level.min(GRAM_LEVEL);
        let f = 1i64 << (level - coarse);
        let cu = 1i64 << coarse;
        let hs: Vec<&HomogeneousFunction> = self.basis.iter().collect();
        // rows are scaled to unit norm; eigenvector rows carry no natural scale
        let rows: Vec<Vec<Complex64>> = sample_rows(&hs, (-cu..=cu).map(|m| m * f), level)
            .into_iter()
            .map(|r| {
                let n = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if n > 0.0 {
                    r.iter().map(|z| z / n).collect()
                } else {
                    r
                }
            })
            .collect();
        let h = CMatrix::from_rows(&rows);
        let gram = h.matmul(&CMatrix::from_fn(h.ncols(), h.nrows(), |i, j| h.get(j, i).conj()));
        let sv = singular_values(&gram);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if smax == 0.0 {
            0.0
        } else {
            smin / smax
        }
    }

    /// `B⁻¹ h(x)` against the cascade translates on grid points of `(-1, 1)`.
    pub fn reconstruction(&self) -> Option<(f64, f64)> {
        let rec = reconstruct_phi(&self.basis, &self.spectral).ok()?;
        let unit = self.unit();
        let mut worst: f64 = 0.0;
        for (k, g) in rec.translates.iter().enumerate() {
            for (i, v) in g.values.iter().enumerate() {
                let m = g.start + i as i64;
                if m.abs() < unit {
                    worst = worst.max((v - self.evaluation.phi_index(m + k as i64 * unit)).norm());
                }
            }
        }
        Some((rel(worst, self.evaluation.max_abs()), rec.condition))
    }

    /// Transfer to `ker (M-λI)^r` and lift back, for rows with `λ ∉ {0, c_0, c_N}`.
    pub fn transfer_round_trip(&self) -> f64 {
        let t = self.scale.t();
        let n = self.n();
        let excluded = [Complex64::new(0.0, 0.0), *t.get(0, 0), *t.get(n, n)];
        let mut worst: f64 = 0.0;
        for (i, info) in self.spectral.rows.iter().enumerate() {
            if n < 2 || excluded.iter().any(|&z| close(z, info.lambda)) {
                continue;
            }
            let v = self.spectral.b.row(i);
            let r = info.position;
            let back = kernel_transfer(v, &self.scale, info.lambda, r)
                .and_then(|vm| kernel_lift(&vm, &self.scale, info.lambda, r));
            let err = match back {
                Ok(w) => rel(
                    w.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
                    max_abs(v),
                ),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(err);
        }
        worst
    }

    /// `Y L - λ Y - Y_prev` on a window around the support, and `Y^0 = v`.
    pub fn extension_round_trip(&self) -> f64 {
        let n = self.n() as i64;
        let w = -n - 4..2 * n + 5;
        let mut worst: f64 = 0.0;
        for (i, h) in self.basis.iter().enumerate() {
            let Some(y) = &h.y else { continue };
            let prev = self.spectral.predecessor(i).and_then(|p| self.basis[p].y.clone());
            let err = (|| {
                let y0 = y.restrict(Restriction::Full0, n as usize).ok()?;
                let exact = y0 == h.row;
                let again = eigen_extend(&h.row, prev.as_ref(), &self.mask, h.lambda, w.clone()).ok()?;
                let same = again.window(w.clone()).ok()? == y.window(w.clone()).ok()?;
                let inner = w.start + n + 1..w.end - n - 1;
                let yl = subdivision(y, &self.mask, inner.clone()).ok()?.window(inner.clone()).ok()?;
                let yv = y.window(inner.clone()).ok()?;
                let pv = match &prev {
                    Some(p) => p.window(inner.clone()).ok()?,
                    None => vec![Complex64::new(0.0, 0.0); yv.len()],
                };
                let scale = max_abs(&y.window(w.clone()).ok()?).max(max_abs(&pv));
                let res = (0..yv.len())
                    .map(|k| (yl[k] - h.lambda * yv[k] - pv[k]).norm())
                    .fold(0.0, f64::max);
                (exact && same).then(|| rel(res, scale))
            })();
            worst = worst.max(err.unwrap_or(f64::INFINITY));
        }
        worst
    }

    /// `S_c(α)` against the materialized block of `L`.
    pub fn subdivision_residual(&self) -> f64 {
        let n = self.n() as i64;
        let lo = -3;
        let vals: Vec<Complex64> = (0..n + 7)
            .map(|k| Complex64::new((0.7 * k as f64).cos(), (1.3 * k as f64).sin() / 2.0))
            .collect();
        let alpha = SequenceWindow::finite(lo, vals);
        let out = lo - n - 2..lo + 2 * (n + 7) + 2;
        let s = subdivision(&alpha, &self.mask, out.clone())
            .and_then(|s| s.window(out.clone()))
            .unwrap_or_default();
        let rows = out.start.div_euclid(2) - 1..(out.end + n) / 2 + 2;
        let l = materialize_l(&self.mask, rows.clone(), out.clone());
        let brute = l.vec_mul(&alpha.window(rows).unwrap());
        let scale = max_abs(&brute);
        if s.len() != brute.len() {
            return f64::INFINITY;
        }
        rel(s.iter().zip(&brute).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max), scale)
    }

    /// For each kernel sequence: `|Y L|` on a window, `Y^M ∈ ker M`, and the
    /// dependency residual `max |Σ Y_k φ(x+k)|` on `[0, 1]`, all relative.
    pub fn kernel_residuals(&self) -> Vec<(f64, f64, f64)> {
        let n = self.n() as i64;
        let w = -2 * n - 4..3 * n + 4;
        self.kernel
            .iter()
            .map(|y| {
                let yw = y.window(w.clone()).unwrap();
                let scale = max_abs(&yw);
                let inner = w.start + n + 1..w.end - n - 1;
                let yl = subdivision(y, &self.mask, inner.clone()).unwrap().window(inner).unwrap();
                let ym = y.restrict(Restriction::Middle, n as usize).unwrap();
                let mres = self.scale.m().vec_mul(&ym);
                let dep = verify_dependency(&self.evaluation, y, -1..n + 1).unwrap_or(f64::INFINITY);
                let ysup = max_abs(&y.window(-1..n + 1).unwrap());
                (
                    rel(max_abs(&yl), scale),
                    rel(max_abs(&mres), max_abs(&ym) * self.scale.m().norm_inf().max(1.0)),
                    rel(dep, self.evaluation.max_abs() * ysup),
                )
            })
            .collect()
    }

    pub fn extendable_count(&self) -> usize {
        self.basis.iter().filter(|h| h.extendable()).count()
    }

    /// All invariant checks; `tolerance` replaces every nonzero default bound.
    pub fn checks(&self, tolerance: Option<f64>) -> Vec<Check> {
        let tol = |d: f64| tolerance.unwrap_or(d);
        let exact = self.spectral.is_exact();
        let n = self.n();
        let tnorm = self.scale.t().norm_inf().max(1.0);
        let mut out = Vec::new();

        let jr = self.spectral.jordan_residual(&self.scale);
        out.push(if exact {
            Check::at_most("jordan form: |BT - JB| (exact)", jr, 0.0)
        } else {
            Check::at_most("jordan form: |BT - JB|", jr, tol(1e-9 * tnorm))
        });
        for (i, info) in self.spectral.rows.iter().enumerate() {
            let r = minimal_order(self.spectral.b.row(i), &self.scale, info.lambda).unwrap_or(usize::MAX);
            let d = if r == info.position { 0.0 } else { f64::INFINITY };
            out.push(Check::at_most(format!("minimal order of row {i} is {}", info.position), d, 0.0));
        }
        out.push(Check::at_most("refinement identity", self.refinement_residual(), tol(1e-10)));
        out.push(Check::at_most(
            "vector refinement phi0(x) = T phi0(2x)",
            self.vector_refinement_residual(),
            tol(1e-10),
        ));
        out.push(Check::at_most(
            "h-refinement h(x) = BTB^-1 h(2x)",
            self.h_refinement_residual().unwrap_or(f64::INFINITY),
            tol(1e-8),
        ));
        for (s, row) in polynomial_rows(&self.spectral) {
            let dev = monomial_deviation(&self.basis[row].samples, s, 0.0, 1.0);
            out.push(Check::at_most(format!("h{row} reproduces x^{s} on [0,1]"), dev, tol(1e-8)));
        }
        if self.independence.m_invertible {
            out.push(Check::at_most("local basis spans the translates on (0,1)", self.local_span_residual(), tol(1e-8)));
        }
        for (i, h) in self.basis.iter().enumerate() {
            out.push(Check::at_most(
                format!("h{i} homogeneity of order {}", h.order),
                self.homogeneity(h, h.order),
                tol(1e-8),
            ));
        }
        out.push(Check::at_most(
            "h(0) = 0 for lambda != 1",
            self.origin_residual(),
            tol(1e-10 * self.evaluation.max_abs().max(1.0)),
        ));
        if let Some((err, cond)) = self.reconstruction() {
            let bound = if self.mask.is_rational() { 1e-8 } else { 1e-6 };
            out.push(Check::at_most(format!("phi reconstruction from B^-1 h (cond {cond:.3e})"), err, tol(bound)));
        } else {
            out.push(Check::at_most("phi reconstruction from B^-1 h", f64::INFINITY, 0.0));
        }
        if n >= 2 {
            out.push(Check::at_most("kernel transfer and lift round trip", self.transfer_round_trip(), tol(1e-8)));
        }
        out.push(Check::at_most("eigen-extension round trip", self.extension_round_trip(), tol(1e-8)));
        out.push(Check::at_most("subdivision vs materialized L", self.subdivision_residual(), tol(1e-12)));
        let ind = &self.independence;
        out.push(Check::at_most(
            format!("dim ker M = deg gcd(p_e, p_o) = {}", ind.gcd_degree),
            (ind.kernel_dim as f64 - ind.gcd_degree as f64).abs(),
            0.0,
        ));
        for (i, (yl, ym, dep)) in self.kernel_residuals().into_iter().enumerate() {
            out.push(Check::at_most(format!("kernel sequence {i}: Y L = 0"), yl, tol(1e-9)));
            out.push(Check::at_most(format!("kernel sequence {i}: Y^M in ker M"), ym, tol(1e-9)));
            out.push(Check::at_most(format!("kernel sequence {i}: dependency residual"), dep, tol(1e-8)));
        }
        if ind.m_invertible {
            // fewer sample points than functions would make the Gram matrix singular by construction
            let points = (1usize << (self.evaluation.level().min(GRAM_LEVEL) + 1)) + 1;
            if points > n {
                out.push(Check::at_least("sample Gram matrix sigma_min/sigma_max", self.gram_ratio(), 1e-8));
            }
            out.push(Check::at_most(
                format!("extendable basis functions = N+1 = {}", n + 1),
                (self.extendable_count() as f64 - (n + 1) as f64).abs(),
                0.0,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(m: &Mask, level: u32) -> Vec<Check> {
        analyze(m, level, (-1.0, 1.0)).unwrap().checks(None)
    }

    fn assert_all_pass(checks: &[Check]) {
        for c in checks {
            assert!(c.passed, "{}: {} vs {}", c.name, c.value, c.tolerance);
        }
    }

    #[test]
    fn bspline_suite_passes() {
        let checks = run(&Mask::from_ratios(&[(1, 4), (3, 4), (3, 4), (1, 4)]).unwrap(), 10);
        assert_all_pass(&checks);
        assert_eq!(checks.iter().filter(|c| c.name.contains("reproduces")).count(), 3);
    }

    #[test]
    fn d4_suite_passes() {
        let s = 3f64.sqrt();
        let m = Mask::from_real(&[(1.0 + s) / 4.0, (3.0 + s) / 4.0, (3.0 - s) / 4.0, (1.0 - s) / 4.0]).unwrap();
        assert_all_pass(&run(&m, 10));
    }

    #[test]
    fn dependent_mask_suite_passes() {
        let m = Mask::from_ratios(&[(1, 2), (1, 2), (1, 2), (1, 2)]).unwrap();
        let a = analyze(&m, 10, (-1.0, 1.0)).unwrap();
        assert!(!a.independence.m_invertible);
        let checks = a.checks(None);
        assert_all_pass(&checks);
        assert!(checks.iter().any(|c| c.name.contains("dependency residual")));
    }

    #[test]
    fn thirds_and_haar_pass() {
        assert_all_pass(&run(&Mask::from_ratios(&[(1, 3), (2, 3), (2, 3), (1, 3)]).unwrap(), 10));
        assert_all_pass(&run(&Mask::from_ratios(&[(1, 1), (1, 1)]).unwrap(), 8));
    }

    #[test]
    fn tolerance_override_applies() {
        let m = Mask::from_ratios(&[(1, 4), (3, 4), (3, 4), (1, 4)]).unwrap();
        let a = analyze(&m, 6, (-1.0, 1.0)).unwrap();
        let checks = a.checks(Some(-1.0));
        assert!(checks.iter().any(|c| !c.passed));
        // exact and lower-bound checks keep their own bounds
        assert!(checks.iter().find(|c| c.name.contains("exact")).unwrap().passed);
    }
}
