//! Moving-sphere sweeps on sampled fields: the critical radius `λ̄(x)`, the
//! invariant `λ̄(x)^{n−2}u(x)`, the one-dimensional gradient lemma and its
//! `n`-dimensional consequence, and the Harnack product with its explicit
//! constant.

use std::io::Write;

use serde::Serialize;

use crate::conformal::{Domain, ScalarField};
use crate::error::{Error, Result};
use crate::parallel::par_map;
use crate::sampling::{log_space, Sampler};

/// Where `u_{x,λ} ≤ u` is tested: rays from the center `x` in fixed
/// directions, with log-spaced radii from just outside `∂B_λ(x)` to the
/// truncation sphere `|y| = truncation`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckPoints {
    pub directions: Vec<Vec<f64>>,
    pub shells: usize,
    pub truncation: f64,
}

impl CheckPoints {
    pub fn random(n: usize, directions: usize, shells: usize, truncation: f64, seed: u64) -> Self {
        let mut rng = Sampler::new(seed);
        let mut dirs = Vec::with_capacity(directions + 2 * n);
        // coordinate axes first so symmetric fields are hit along their axes
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = s;
                dirs.push(e);
            }
        }
        dirs.extend((0..directions).map(|_| rng.sphere(n)));
        CheckPoints { directions: dirs, shells, truncation }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_steps: usize,
    pub bisection_steps: usize,
    pub violation_tol: f64,
    pub check_points: CheckPoints,
}

impl SweepConfig {
    /// Defaults: 256 log-spaced radii, 40 bisection steps, relative tolerance `1e-9`.
    pub fn new(n: usize, lambda_min: f64, lambda_max: f64, truncation: f64, seed: u64) -> Result<Self> {
        let cfg = SweepConfig {
            lambda_min,
            lambda_max,
            lambda_steps: 256,
            bisection_steps: 40,
            violation_tol: 1e-9,
            check_points: CheckPoints::random(n, 26, 48, truncation, seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max) {
            return Err(Error::Domain(format!(
                "need 0 < lambda_min < lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.lambda_steps < 16 {
            return Err(Error::Domain(format!("lambda_steps must be at least 16, got {}", self.lambda_steps)));
        }
        if !(self.violation_tol >= 0.0) {
            return Err(Error::Domain("violation_tol must be nonnegative".into()));
        }
        if self.check_points.directions.is_empty() || self.check_points.shells < 2 {
            return Err(Error::Domain("need at least one direction and two shells".into()));
        }
        Ok(())
    }

    /// Relative width of one λ grid cell, used as the guard band around `∂B_λ(x)`.
    pub fn guard(&self) -> f64 {
        (self.lambda_max / self.lambda_min).powf(1.0 / (self.lambda_steps as f64 - 1.0)) - 1.0
    }
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn truncation_radius(u: &dyn ScalarField, cp: &CheckPoints) -> f64 {
    match u.domain() {
        Domain::Ball { radius } => cp.truncation.min(radius),
        _ => cp.truncation,
    }
}

/// `u_{x,λ}(y) = (λ/|y−x|)^{n−2} u(x + λ²(y−x)/|y−x|²)`.
pub fn kelvin_value(u: &dyn ScalarField, x: &[f64], lambda: f64, y: &[f64]) -> Result<f64> {
    let n = x.len();
    let d2: f64 = y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
    if d2 == 0.0 {
        return Err(Error::Singularity { point: y.to_vec() });
    }
    let k = lambda * lambda / d2;
    let z: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi + k * (yi - xi)).collect();
    Ok((lambda * lambda / d2).powf((n as f64 - 2.0) / 2.0) * u.value(&z)?)
}

/// `max (u_{x,λ}(y) − u(y))/u(y)` over check points outside the guard band;
/// a value `≤ 0` means the inequality holds on the sample.
pub fn msi_violation(u: &dyn ScalarField, x: &[f64], lambda: f64, cfg: &SweepConfig) -> Result<f64> {
    let cp = &cfg.check_points;
    let t = truncation_radius(u, cp);
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if norm(x) + lambda >= t {
        return Err(Error::Geometry(format!(
            "ball of radius {lambda} about {x:?} leaves the truncated domain of radius {t}"
        )));
    }
    let inner = lambda * (1.0 + cfg.guard());
    let mut worst = f64::NEG_INFINITY;
    let mut y = vec![0.0; x.len()];
    for dir in &cp.directions {
        let xd: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
        let outer = -xd + (xd * xd - norm(x).powi(2) + t * t).sqrt();
        if outer <= inner {
            continue;
        }
        for rho in log_space(inner, outer, cp.shells) {
            for i in 0..y.len() {
                y[i] = x[i] + rho * dir[i];
            }
            let uy = u.value(&y)?;
            let v = (kelvin_value(u, x, lambda, &y)? - uy) / uy;
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusFlag {
    Interior,
    /// The inequality already fails at `lambda_min`.
    FailsAtMinimum,
    /// The inequality holds across the whole range.
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalRadius {
    pub lambda_bar: f64,
    pub flag: RadiusFlag,
}

/// `λ̄(x)` on the truncated domain: scan the log grid for the first radius
/// with violation above tolerance, then bisect the bracketing cell.
pub fn critical_radius(u: &dyn ScalarField, x: &[f64], cfg: &SweepConfig) -> Result<CriticalRadius> {
    cfg.validate()?;
    let holds = |l: f64| -> Result<bool> { Ok(msi_violation(u, x, l, cfg)? <= cfg.violation_tol) };
    let grid = log_space(cfg.lambda_min, cfg.lambda_max, cfg.lambda_steps);
    if !holds(grid[0])? {
        return Ok(CriticalRadius { lambda_bar: cfg.lambda_min, flag: RadiusFlag::FailsAtMinimum });
    }
    let mut lo = grid[0];
    let mut hi = None;
    for &l in &grid[1..] {
        if holds(l)? {
            lo = l;
        } else {
            hi = Some(l);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(CriticalRadius { lambda_bar: cfg.lambda_max, flag: RadiusFlag::Unbounded });
    };
    for _ in 0..cfg.bisection_steps {
        let mid = (lo * hi).sqrt();
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalRadius { lambda_bar: 0.5 * (lo + hi), flag: RadiusFlag::Interior })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaEntry {
    pub center: Vec<f64>,
    pub lambda_bar: f64,
    pub flag: RadiusFlag,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaReport {
    pub entries: Vec<AlphaEntry>,
    pub spread: f64,
    /// Mean of `|y|^{n−2}u(y)` over the truncation sphere.
    pub reference: f64,
    pub all_interior: bool,
}

impl AlphaReport {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    pub fn write_sweep_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.entries.first().map(|e| e.center.len()).unwrap_or(0);
        let head: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},lambda_bar,alpha", head.join(","))?;
        for e in &self.entries {
            let xs: Vec<String> = e.center.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{},{:e},{:e}", xs.join(","), e.lambda_bar, e.alpha)?;
        }
        Ok(())
    }
}

/// `α(x) = λ̄(x)^{n−2}u(x)` at each center, computed in parallel.
pub fn alpha_invariant(u: &dyn ScalarField, centers: &[Vec<f64>], cfg: &SweepConfig) -> Result<AlphaReport> {
    let n = u.dim() as f64;
    let results = par_map(centers, |x| -> Result<AlphaEntry> {
        let cr = critical_radius(u, x, cfg)?;
        Ok(AlphaEntry {
            center: x.clone(),
            lambda_bar: cr.lambda_bar,
            flag: cr.flag,
            alpha: cr.lambda_bar.powf(n - 2.0) * u.value(x)?,
        })
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max = entries.iter().map(|e| e.alpha).fold(f64::NEG_INFINITY, f64::max);
    let min = entries.iter().map(|e| e.alpha).fold(f64::INFINITY, f64::min);
    let t = truncation_radius(u, &cfg.check_points) * (1.0 - 1e-12);
    let dirs = &cfg.check_points.directions;
    let mut reference = 0.0;
    for d in dirs {
        let y: Vec<f64> = d.iter().map(|v| v * t).collect();
        reference += t.powf(n - 2.0) * u.value(&y)?;
    }
    reference /= dirs.len() as f64;
    Ok(AlphaReport {
        all_interior: entries.iter().all(|e| e.flag == RadiusFlag::Interior),
        spread: max - min,
        reference,
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HLemmaReport {
    pub triples_checked: usize,
    pub hypothesis_pass: bool,
    /// Largest relative excess of the left side over `h(s)`.
    pub hypothesis_worst: f64,
    pub conclusion_pass: bool,
    /// Largest `(|h′(s)| − (α/2a)h(s))/h(s)` for `|s| ≤ a`.
    pub conclusion_worst: f64,
}

impl HLemmaReport {
    /// The lemma's implication on this sample: hypothesis ⇒ conclusion.
    pub fn implication_holds(&self) -> bool {
        !self.hypothesis_pass || self.conclusion_pass
    }
}

pub const H_HYPOTHESIS_TOL: f64 = 1e-12;
pub const H_CONCLUSION_TOL: f64 = 1e-9;

/// Brute-force scan of the one-dimensional reflection inequality over a
/// `density³` grid of `(τ, s, λ)` with `|τ| < 2a`, `|s| ≤ 4a`, `0 < λ < a`,
/// `λ < |s − τ|`, followed by the bound `|h′| ≤ (α/2a)h` on `[−a, a]`.
pub fn h_lemma_check<H, D>(h: H, dh: D, alpha: f64, a: f64, density: usize) -> Result<HLemmaReport>
where
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(a > 0.0) || density < 2 {
        return Err(Error::Domain(format!("need a > 0 and density >= 2, got a = {a}, density = {density}")));
    }
    let m = density as f64;
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for i in 0..density {
        let tau = -2.0 * a + (i as f64 + 0.5) * 4.0 * a / m;
        for j in 0..density {
            let s = -4.0 * a + j as f64 * 8.0 * a / (m - 1.0);
            let d = (s - tau).abs();
            let hs = h(s);
            for k in 0..density {
                let lambda = (k as f64 + 0.5) * a / m;
                if lambda >= d {
                    continue;
                }
                let lhs = (lambda / d).powf(alpha) * h(tau + lambda * lambda * (s - tau) / (d * d));
                worst = worst.max((lhs - hs) / hs.abs().max(f64::MIN_POSITIVE));
                checked += 1;
            }
        }
    }
    let c = alpha / (2.0 * a);
    let mut cworst = f64::NEG_INFINITY;
    let pts = 1024;
    for j in 0..=pts {
        let s = -a + 2.0 * a * j as f64 / pts as f64;
        let hs = h(s);
        cworst = cworst.max((dh(s).abs() - c * hs) / hs.abs().max(f64::MIN_POSITIVE));
    }
    Ok(HLemmaReport {
        triples_checked: checked,
        hypothesis_pass: worst <= H_HYPOTHESIS_TOL,
        hypothesis_worst: worst,
        conclusion_pass: cworst <= H_CONCLUSION_TOL,
        conclusion_worst: cworst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientBoundReport {
    pub hypothesis_pass: bool,
    pub hypothesis_worst: f64,
    /// `false` when the hypothesis fails and nothing is asserted.
    pub asserted: bool,
    pub conclusion_pass: bool,
    /// `min (bound − |∇u|)/bound` over the sample of `B_a`.
    pub slack: f64,
    pub points_checked: usize,
}

pub const GRADIENT_BOUND_TOL: f64 = 1e-8;

/// Sampled check of `|∇u(x)| ≤ ((n−2)/(2a))u(x)` on `B_a`, asserted only when
/// `u_{x,λ} ≤ u` holds on `B_{8a}` for the sampled `x ∈ B_{4a}`, `λ < 2a`.
pub fn gradient_bound_check(u: &dyn ScalarField, a: f64, seed: u64) -> Result<GradientBoundReport> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    let n = u.dim();
    let mut rng = Sampler::new(seed);
    let mut centers = vec![vec![0.0; n]];
    centers.extend((0..24).map(|_| rng.ball(n, 4.0 * a)));
    let cfg = SweepConfig {
        lambda_min: 0.05 * a,
        lambda_max: 2.0 * a * (1.0 - 1e-9),
        lambda_steps: 16,
        bisection_steps: 0,
        violation_tol: 1e-10,
        check_points: CheckPoints::random(n, 14, 24, 8.0 * a, seed ^ 0x5eed),
    };
    let lambdas = log_space(cfg.lambda_min, cfg.lambda_max, cfg.lambda_steps);
    let per_center = par_map(&centers, |x| -> Result<f64> {
        let mut w = f64::NEG_INFINITY;
        for &l in &lambdas {
            w = w.max(msi_violation(u, x, l, &cfg)?);
        }
        Ok(w)
    });
    let mut hyp = f64::NEG_INFINITY;
    for w in per_center {
        hyp = hyp.max(w?);
    }
    let hypothesis_pass = hyp <= cfg.violation_tol;

    let c = (n as f64 - 2.0) / (2.0 * a);
    let mut pts = vec![vec![0.0; n]];
    pts.extend((0..200).map(|_| rng.ball(n, a)));
    let mut slack = f64::INFINITY;
    for x in &pts {
        let jet = u.jet(x)?;
        let bound = c * jet.value;
        slack = slack.min((bound - jet.gradient.norm()) / bound);
    }
    Ok(GradientBoundReport {
        hypothesis_pass,
        hypothesis_worst: hyp,
        asserted: hypothesis_pass,
        conclusion_pass: slack >= -GRADIENT_BOUND_TOL,
        slack,
        points_checked: pts.len(),
    })
}

/// `C(n) = 4^{n−2}(2^{n+6}n⁴)^{n−2}` as an exact integer, when it fits.
pub fn harnack_constant_exact(n: usize) -> Option<u128> {
    if n < 3 {
        return None;
    }
    let e = (n - 2) as u32;
    let r = 2u128.checked_pow(n as u32 + 6)?.checked_mul((n as u128).checked_pow(4)?)?;
    4u128.checked_pow(e)?.checked_mul(r.checked_pow(e)?)
}

/// `C(n) = 4^{n−2}(2^{n+6}n⁴)^{n−2}`.
pub fn harnack_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("n must be at least 3, got {n}")));
    }
    let e = (n - 2) as i32;
    let r = 2f64.powi(n as i32 + 6) * (n as f64).powi(4);
    Ok(4f64.powi(e) * r.powi(e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackReport {
    pub n: usize,
    pub radius: f64,
    pub delta: f64,
    pub sup_inner: f64,
    pub inf_outer: f64,
    pub product: f64,
    pub bound: f64,
    pub pass: bool,
    /// Relative gap between the rescaled product at unit radius and `δ^{(n−2)/2}R^{n−2}P`.
    pub rescaling_exactness: f64,
    pub samples: usize,
}

fn unit_ball_samples(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Sampler::new(seed);
    let mut pts = vec![vec![0.0; n]];
    for i in 0..n {
        for r in [1.0, 2.0] {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = s * r;
                pts.push(e);
            }
        }
    }
    for _ in 0..400 {
        pts.push(rng.ball(n, 2.0));
    }
    for _ in 0..200 {
        let d = rng.sphere(n);
        let r = if pts.len() % 2 == 0 { 1.0 } else { 2.0 };
        pts.push(d.into_iter().map(|v| v * r).collect());
    }
    pts
}

fn sup_inf(values: &[(f64, f64)]) -> (f64, f64) {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for &(r, v) in values {
        if r <= 1.0 {
            sup = sup.max(v);
        }
        inf = inf.min(v);
    }
    (sup, inf)
}

/// `(sup_{B_R} u)(inf_{B_{2R}} u)` against `C(n)δ^{(2−n)/2}R^{2−n}`, with the
/// rescaling `ũ(x) = δ^{(n−2)/4}R^{(n−2)/2}u(Rx)` checked on the same sample.
pub fn harnack_product(u: &dyn ScalarField, radius: f64, delta: f64, seed: u64) -> Result<HarnackReport> {
    if !(radius > 0.0) || !(delta > 0.0) {
        return Err(Error::Domain(format!("need R > 0 and delta > 0, got {radius}, {delta}")));
    }
    let n = u.dim();
    let m = n as f64 - 2.0;
    let unit = unit_ball_samples(n, seed);
    let mut raw = Vec::with_capacity(unit.len());
    let mut scaled = Vec::with_capacity(unit.len());
    let k = delta.powf(m / 4.0) * radius.powf(m / 2.0);
    for z in &unit {
        let x: Vec<f64> = z.iter().map(|v| v * radius).collect();
        let v = u.value(&x)?;
        if !(v > 0.0) {
            return Err(Error::Positivity { point: x, value: v });
        }
        let r = norm(z);
        raw.push((r, v));
        scaled.push((r, k * v));
    }
    let (sup_inner, inf_outer) = sup_inf(&raw);
    let product = sup_inner * inf_outer;
    let (s2, i2) = sup_inf(&scaled);
    let expect = delta.powf(m / 2.0) * radius.powf(m) * product;
    let bound = harnack_constant(n)? * delta.powf(-m / 2.0) * radius.powf(-m);
    Ok(HarnackReport {
        n,
        radius,
        delta,
        sup_inner,
        inf_outer,
        product,
        bound,
        pass: product <= bound,
        rescaling_exactness: (s2 * i2 - expect).abs() / expect.abs().max(1.0),
        samples: unit.len(),
    })
}
