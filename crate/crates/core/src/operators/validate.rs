//! Sampled checks of the structural hypotheses on `(f, Γ)`.

use serde::Serialize;

use crate::sampling::{log_space, Sampler};

use super::operator::CurvatureOperator;
use super::sigma::sigma_1;

/// Midpoint concavity slack at unit scale.
pub const CONCAVITY_TOL: f64 = 1e-9;
/// Relative tolerance of the permutation check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance of the homogeneity check.
pub const HOMOGENEITY_TOL: f64 = 1e-9;
/// Level that `f` must drop below when approaching `∂Γ`.
pub const BOUNDARY_LEVEL: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckResult {
    pub pass: bool,
    pub worst_violation: f64,
    pub witness: Vec<f64>,
}

impl CheckResult {
    fn new() -> Self {
        Self {
            pass: true,
            worst_violation: 0.0,
            witness: Vec::new(),
        }
    }

    /// Record a violation amount; any positive amount fails the check.
    fn record(&mut self, violation: f64, witness: &[f64]) {
        self.record_with(violation, witness, 0.0);
    }

    fn record_with(&mut self, violation: f64, witness: &[f64], tol: f64) {
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if violation > self.worst_violation || (self.witness.is_empty() && violation > 0.0) {
            self.worst_violation = violation;
            self.witness = witness.to_vec();
        }
        if violation > tol {
            self.pass = false;
        }
    }

    fn fail(&mut self, witness: &[f64]) {
        self.record(f64::INFINITY, witness);
    }
}

/// One entry per sampled hypothesis; serializes to a flat JSON object.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub symmetry: CheckResult,
    pub gradient_positivity: CheckResult,
    pub concavity: CheckResult,
    pub ray_monotonicity: CheckResult,
    pub cone_nesting: CheckResult,
    pub boundary_vanishing: CheckResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneity: Option<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.pass)
    }

    pub fn checks(&self) -> Vec<(&'static str, &CheckResult)> {
        let mut v = vec![
            ("symmetry", &self.symmetry),
            ("gradient_positivity", &self.gradient_positivity),
            ("concavity", &self.concavity),
            ("ray_monotonicity", &self.ray_monotonicity),
            ("cone_nesting", &self.cone_nesting),
            ("boundary_vanishing", &self.boundary_vanishing),
        ];
        if let Some(h) = &self.homogeneity {
            v.push(("homogeneity", h));
        }
        v
    }
}

/// Draws points of `Γ`: half are positive directions (uniform on the simplex),
/// half are uniform sphere directions kept only when they fall in the cone;
/// each direction is scaled log-uniformly in `[1e-2, 1e2]`.
pub fn sample_cone(op: &CurvatureOperator, count: usize, sampler: &mut Sampler) -> Vec<Vec<f64>> {
    let n = op.n();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        let dir = if out.len() % 2 == 0 || attempts > 200 * count {
            sampler.simplex(n)
        } else {
            sampler.sphere(n)
        };
        attempts += 1;
        if !op.contains(&dir) {
            continue;
        }
        let s = sampler.log_uniform(1e-2, 1e2);
        out.push(dir.into_iter().map(|x| x * s).collect());
    }
    out
}

pub fn validate_operator(op: &CurvatureOperator, sample_count: usize, seed: u64) -> ValidationReport {
    let mut sampler = Sampler::new(seed);
    let n = op.n();
    let samples = sample_cone(op, sample_count, &mut sampler);
    let value = |l: &[f64]| op.value(l).unwrap_or(f64::NAN);

    let mut symmetry = CheckResult::new();
    let mut gradient = CheckResult::new();
    let mut monotone = CheckResult::new();
    let ray_grid = log_space(1e-1, 1e1, 16);
    for l in &samples {
        let perm = sampler.permutation(n);
        let pl: Vec<f64> = perm.iter().map(|&i| l[i]).collect();
        let (a, b) = (value(l), value(&pl));
        symmetry.record_with((a - b).abs() / a.abs().max(1.0), l, SYMMETRY_TOL);

        match op.gradient(l) {
            Ok(g) => {
                let min = g.iter().copied().fold(f64::INFINITY, f64::min);
                if !(min > 0.0) {
                    gradient.record((-min).max(f64::MIN_POSITIVE), l);
                }
            }
            Err(_) => gradient.fail(l),
        }

        let vals: Vec<f64> = ray_grid
            .iter()
            .map(|s| value(&l.iter().map(|x| x * s).collect::<Vec<_>>()))
            .collect();
        for w in vals.windows(2) {
            // strict increase: equal consecutive values also fail
            let drop = w[0] - w[1];
            if !(w[1] > w[0]) {
                monotone.record(drop.max(f64::MIN_POSITIVE), l);
            }
        }
    }
    let mut concavity = CheckResult::new();
    for pair in samples.chunks(2) {
        if let [l, m] = pair {
            let mid: Vec<f64> = l.iter().zip(m).map(|(a, b)| 0.5 * (a + b)).collect();
            let (fl, fm, fmid) = (value(l), value(m), value(&mid));
            let scale = fl.abs().max(fm.abs()).max(1.0);
            concavity.record_with(((fl + fm) / 2.0 - fmid) / scale, &mid, CONCAVITY_TOL);
        }
    }

    let mut nesting = CheckResult::new();
    for _ in 0..sample_count.max(1) {
        let s = sampler.log_uniform(1e-2, 1e2);
        let p: Vec<f64> = sampler.simplex(n).into_iter().map(|x| x * s).collect();
        if !op.contains(&p) {
            nesting.fail(&p);
        }
    }
    for l in &samples {
        let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s1 = sigma_1(l) / norm;
        if s1 <= 0.0 {
            nesting.record(-s1 + f64::MIN_POSITIVE, l);
        }
    }

    let mut boundary = CheckResult::new();
    for l in samples.iter().take(sample_count.min(100)) {
        match approach_boundary(op, l) {
            Some((last, q)) => boundary.record_with(last - BOUNDARY_LEVEL, &q, 0.0),
            None => boundary.fail(l),
        }
    }
    if boundary.pass {
        boundary.worst_violation = 0.0;
    }

    let homogeneity = op.homogeneous_degree().map(|d| {
        let mut h = CheckResult::new();
        for l in &samples {
            let f0 = value(l);
            for s in [0.1, 7.3] {
                let fs = value(&l.iter().map(|x| x * s).collect::<Vec<_>>());
                let expected = s.powf(d) * f0;
                h.record_with((fs - expected).abs() / expected.abs().max(f64::MIN_POSITIVE), l, HOMOGENEITY_TOL);
            }
        }
        h
    });

    ValidationReport {
        symmetry,
        gradient_positivity: gradient,
        concavity,
        ray_monotonicity: monotone,
        cone_nesting: nesting,
        boundary_vanishing: boundary,
        homogeneity,
    }
}

/// Walks from the unit vector `λ/|λ|` along `−e` to the cone boundary and
/// evaluates `f` at points approaching it from inside. Returns the value at
/// the closest point and that point.
fn approach_boundary(op: &CurvatureOperator, lambda: &[f64]) -> Option<(f64, Vec<f64>)> {
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    let unit: Vec<f64> = lambda.iter().map(|x| x / norm).collect();
    let shifted = |s: f64| -> Vec<f64> { unit.iter().map(|x| x - s).collect() };
    // Γ ⊂ Γ_1, so the shift leaves the cone once σ_1 < 0.
    let mut lo = 0.0;
    let mut hi = sigma_1(&unit) / unit.len() as f64 * 1.000001 + 1e-12;
    if op.contains(&shifted(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if op.contains(&shifted(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut last = None;
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14] {
        let q = shifted(lo - eps);
        let v = op.value(&q).ok()?;
        if v > prev * (1.0 + 1e-9) {
            return Some((f64::INFINITY, q));
        }
        prev = v;
        last = Some((v, q));
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::cone::ConeSpec;
    use crate::operators::operator::{make_sigma_k_operator, make_sigma_power_operator};

    #[test]
    fn sigma2_root_passes_everything() {
        let op = make_sigma_k_operator(4, 2).unwrap();
        let r = validate_operator(&op, 500, 11);
        for (name, c) in r.checks() {
            assert!(c.pass, "{name} failed: {c:?}");
        }
    }

    #[test]
    fn wrong_degree_tag_fails_homogeneity() {
        let op = make_sigma_power_operator(3, 1, 2.0).unwrap().with_degree_tag(Some(1.0));
        let r = validate_operator(&op, 100, 3);
        assert!(!r.homogeneity.as_ref().unwrap().pass);
    }

    #[test]
    fn negative_sigma1_fails_gradient_positivity() {
        let cone = ConeSpec::gamma_k(3, 1).unwrap();
        let op = CurvatureOperator::custom(
            "-sigma1",
            cone,
            |l: &[f64]| -l.iter().sum::<f64>(),
            |l: &[f64]| vec![-1.0; l.len()],
            Some(1.0),
        );
        let r = validate_operator(&op, 100, 5);
        assert!(!r.gradient_positivity.pass);
        assert!((r.gradient_positivity.worst_violation - 1.0).abs() < 1e-15);
        assert!(!r.witness_is_empty_for("gradient_positivity"));
    }

    impl ValidationReport {
        fn witness_is_empty_for(&self, name: &str) -> bool {
            self.checks()
                .into_iter()
                .find(|(n, _)| *n == name)
                .map(|(_, c)| c.witness.is_empty())
                .unwrap_or(true)
        }
    }

    #[test]
    fn report_serializes_flat() {
        let op = make_sigma_k_operator(3, 2).unwrap();
        let r = validate_operator(&op, 20, 1);
        let v = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        assert!(obj["concavity"]["pass"].as_bool().unwrap());
        assert!(obj["symmetry"].get("worst_violation").is_some());
        assert!(obj.contains_key("homogeneity"));
    }
}
