//! Generated test functions for the one-dimensional reflection lemma and a
//! small field catalog for its gradient-bound consequence in `ℝⁿ`.

use std::sync::Arc;

use serde::Serialize;

use crate::conformal::{FieldSpec, ScalarField};
use crate::error::Result;
use crate::exact::BubbleParams;
use crate::moving_sphere::{gradient_bound_check, h_lemma_check, GradientBoundReport, HLemmaReport};
use crate::parallel::par_map;
use crate::sampling::Sampler;

/// Positive functions on `[−4a, 4a]` with closed-form derivatives, or the
/// trace of a catalog field along a line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HFunction {
    /// `(1 + β(s − s₀)²)^{−p}`
    Bubble { beta: f64, center: f64, power: f64 },
    /// `e^{cs}`
    Exponential { rate: f64 },
    /// `cosh(cs)`
    Cosh { rate: f64 },
    /// `1 + εs²`
    Quadratic { epsilon: f64 },
    /// `u(x₀ + s e)`
    Trace { field: FieldSpec, origin: Vec<f64>, direction: Vec<f64> },
}

type Real = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

impl HFunction {
    /// `(h, h′)` as closures.
    pub fn evaluators(&self) -> Result<(Real, Real)> {
        Ok(match self.clone() {
            HFunction::Bubble { beta, center, power } => (
                Arc::new(move |s: f64| (1.0 + beta * (s - center).powi(2)).powf(-power)),
                Arc::new(move |s: f64| {
                    let q = 1.0 + beta * (s - center).powi(2);
                    -2.0 * power * beta * (s - center) * q.powf(-power - 1.0)
                }),
            ),
            HFunction::Exponential { rate } => (
                Arc::new(move |s: f64| (rate * s).exp()),
                Arc::new(move |s: f64| rate * (rate * s).exp()),
            ),
            HFunction::Cosh { rate } => (
                Arc::new(move |s: f64| (rate * s).cosh()),
                Arc::new(move |s: f64| rate * (rate * s).sinh()),
            ),
            HFunction::Quadratic { epsilon } => (
                Arc::new(move |s: f64| 1.0 + epsilon * s * s),
                Arc::new(move |s: f64| 2.0 * epsilon * s),
            ),
            HFunction::Trace { field, origin, direction } => {
                let u: Arc<dyn ScalarField> = field.build()?;
                let (u2, o2, d2) = (u.clone(), origin.clone(), direction.clone());
                let at = |o: &[f64], d: &[f64], s: f64| -> Vec<f64> { o.iter().zip(d).map(|(a, b)| a + s * b).collect() };
                (
                    Arc::new(move |s: f64| u.value(&at(&origin, &direction, s)).unwrap_or(f64::NAN)),
                    Arc::new(move |s: f64| match u2.jet(&at(&o2, &d2, s)) {
                        Ok(j) => j.gradient.iter().zip(&d2).map(|(g, e)| g * e).sum(),
                        Err(_) => f64::NAN,
                    }),
                )
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HCase {
    pub h: HFunction,
    pub alpha: f64,
    pub a: f64,
    /// `a·max|h′/h| / (α/2)` on `[−a, a]`: above 1 means the bound fails.
    pub bound_ratio: f64,
}

fn bound_ratio(h: &HFunction, alpha: f64, a: f64) -> Result<f64> {
    let (f, df) = h.evaluators()?;
    let mut worst = 0.0f64;
    for j in 0..=1024 {
        let s = -a + 2.0 * a * j as f64 / 1024.0;
        worst = worst.max(df(s).abs() / f(s));
    }
    Ok(worst * 2.0 * a / alpha)
}

/// Ratios in this band are rejected so every case sits clearly on one side
/// of the gradient bound.
pub const BORDERLINE: (f64, f64) = (0.7, 1.5);

fn trace_fields(n: usize) -> Vec<FieldSpec> {
    let mut off = vec![0.0; n];
    off[0] = 0.4;
    let bubble = BubbleParams { n, a: 1.3, beta: 0.7, center: off };
    vec![
        FieldSpec::Bubble(bubble.clone()),
        FieldSpec::Gaussian { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; n] },
        FieldSpec::BubbleWithLump { bubble, amplitude: 0.05, width: 0.5, center: vec![0.0; n] },
    ]
}

/// `count` cases cycling through the families, with parameters drawn from
/// `seed` and borderline draws skipped.
pub fn h_family(count: usize, seed: u64) -> Result<Vec<HCase>> {
    let mut rng = Sampler::new(seed);
    let traces = trace_fields(3);
    let mut out = Vec::with_capacity(count);
    let mut family = 0usize;
    while out.len() < count {
        let rho = [0.3, 0.6, 2.0, 4.0][rng.index(4)];
        let (h, alpha, a) = match family % 5 {
            0 => {
                let beta = rng.log_uniform(0.25, 4.0);
                let power = [0.5, 1.0, 1.5, 2.0][rng.index(4)];
                let a = rho / beta.sqrt();
                let center = rng.uniform(-0.5, 0.5) * a;
                (HFunction::Bubble { beta, center, power }, 2.0 * power, a)
            }
            1 => {
                let alpha = rng.log_uniform(0.5, 4.0);
                let a = rng.log_uniform(0.3, 1.5);
                (HFunction::Exponential { rate: rho * alpha / (2.0 * a) }, alpha, a)
            }
            2 => {
                let alpha = rng.log_uniform(0.5, 4.0);
                let a = rng.log_uniform(0.3, 1.5);
                (HFunction::Cosh { rate: rho * alpha / (2.0 * a) }, alpha, a)
            }
            3 => {
                let alpha = rng.log_uniform(0.5, 4.0);
                let a = rng.log_uniform(0.3, 1.5);
                (HFunction::Quadratic { epsilon: rng.log_uniform(0.05, 20.0) / (a * a) }, alpha, a)
            }
            _ => {
                let field = traces[rng.index(traces.len())].clone();
                let origin = rng.ball(3, 0.5);
                let direction = rng.sphere(3);
                (HFunction::Trace { field, origin, direction }, 1.0, rng.log_uniform(0.1, 1.0))
            }
        };
        family += 1;
        let q = bound_ratio(&h, alpha, a)?;
        if q > BORDERLINE.0 && q < BORDERLINE.1 {
            continue;
        }
        out.push(HCase { h, alpha, a, bound_ratio: q });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HCaseResult {
    pub case: HCase,
    pub report: HLemmaReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCase {
    pub field: FieldSpec,
    pub a: f64,
    pub report: GradientBoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    pub h_cases: Vec<HCaseResult>,
    pub hypothesis_passes: usize,
    pub implication_violations: usize,
    pub gradient_cases: Vec<GradientCase>,
    pub gradient_asserted: usize,
    pub gradient_violations: usize,
}

/// Fields in `ℝ³` paired with the radius `a` of the gradient bound. The
/// unit bubble appears twice: at `a = 1/2`, where `λ̄ ≡ 1 = 2a` meets the
/// hypothesis, and at `a = 1`, where the hypothesis fails and nothing is
/// asserted.
pub fn gradient_catalog() -> Vec<(FieldSpec, f64)> {
    let n = 3;
    let b = |a: f64, beta: f64, c0: f64| {
        let mut center = vec![0.0; n];
        center[0] = c0;
        FieldSpec::Bubble(BubbleParams { n, a, beta, center })
    };
    vec![
        (FieldSpec::Constant { n, c: 1.0 }, 1.0),
        (b(1.0, 1.0, 0.0), 0.5),
        (b(1.0, 1.0, 0.0), 1.0),
        (b(2.0, 4.0, 0.3), 0.25),
        (b(0.5, 0.25, -1.0), 1.0),
        (FieldSpec::Gaussian { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; n] }, 0.25),
    ]
}

pub const H_DENSITY: usize = 64;

pub fn lemma_suite(h_count: usize, seed: u64) -> Result<LemmaSuiteReport> {
    let cases = h_family(h_count, seed)?;
    let reports = par_map(&cases, |c| -> Result<HLemmaReport> {
        let (f, df) = c.h.evaluators()?;
        h_lemma_check(|s| f(s), |s| df(s), c.alpha, c.a, H_DENSITY)
    });
    let mut h_cases = Vec::with_capacity(cases.len());
    for (case, r) in cases.into_iter().zip(reports) {
        h_cases.push(HCaseResult { case, report: r? });
    }
    let mut gradient_cases = Vec::new();
    for (i, (field, a)) in gradient_catalog().into_iter().enumerate() {
        let u = field.build()?;
        let report = gradient_bound_check(u.as_ref(), a, seed.wrapping_add(i as u64))?;
        gradient_cases.push(GradientCase { field, a, report });
    }
    Ok(LemmaSuiteReport {
        hypothesis_passes: h_cases.iter().filter(|c| c.report.hypothesis_pass).count(),
        implication_violations: h_cases.iter().filter(|c| !c.report.implication_holds()).count(),
        gradient_asserted: gradient_cases.iter().filter(|c| c.report.asserted).count(),
        gradient_violations: gradient_cases
            .iter()
            .filter(|c| c.report.asserted && !c.report.conclusion_pass)
            .count(),
        h_cases,
        gradient_cases,
    })
}
