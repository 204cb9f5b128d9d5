//! One function per subcommand. Each returns an [`Outcome`] and touches no
//! files; writing is left to the caller.

use serde::Serialize;

use super::output::{to_json_bytes, Check, Outcome};
use super::{
    ConjugationArgs, HarnackArgs, HomogenizeArgs, LiouvilleArgs, MovingSphereArgs, RadialArgs, RadialSuite,
    SphereSuite, ValidateArgs, YamabeArgs,
};
use crate::conformal::{conjugation_suite, ConjugationReport};
use crate::error::{Error, Result};
use crate::exact::{
    ball_robin_constant, ball_robin_residual, bubble_from_initial_conditions, halfspace_residual,
    verify_fullspace_at, BubbleField, BubbleParams, Residuals,
};
use crate::gradient_lemma::{lemma_suite, LemmaSuiteReport};
use crate::moving_sphere::{
    alpha_invariant, critical_radius, harnack_constant, harnack_constant_exact, harnack_product, AlphaReport,
    HarnackReport, RadiusFlag, SweepConfig,
};
use crate::operators::{
    homogenize, make_sigma_k_operator, make_sigma_power_operator, mu_star, sample_cone, validate_operator,
    CurvatureOperator, ValidationReport,
};
use crate::radial::{compare_to_bubble, shoot, ShootStatus};
use crate::sampling::Sampler;
use crate::yamabe::{
    constant_solution, continuation, fd_jacobian, jacobian, ContinuationStep, NewtonOptions, PeriodicGrid,
};

/// `sigmaK` is `σ_K`; `sigmaK-root` is `σ_K^{1/K}`.
pub fn parse_operator(name: &str, n: usize) -> Result<CurvatureOperator> {
    let bad = || Error::Domain(format!("unknown operator {name:?}; expected sigmaK or sigmaK-root"));
    let rest = name.strip_prefix("sigma").ok_or_else(bad)?;
    let (digits, root) = match rest.strip_suffix("-root") {
        Some(d) => (d, true),
        None => (rest, false),
    };
    let k: usize = digits.parse().map_err(|_| bad())?;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if root {
        make_sigma_k_operator(n, k)
    } else {
        make_sigma_power_operator(n, k, 1.0)
    }
}

fn need_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("n must be at least 3, got {n}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateData<'a> {
    operator: &'a str,
    n: usize,
    samples: usize,
    report: &'a ValidationReport,
}

pub fn validate(args: &ValidateArgs, seed: u64) -> Result<Outcome> {
    need_dim(args.n)?;
    let op = parse_operator(&args.op, args.n)?;
    let report = validate_operator(&op, args.samples, seed);
    let checks = report.checks().into_iter().map(|(name, c)| Check::holds(name, c.pass)).collect();
    let data = ValidateData { operator: op.name(), n: args.n, samples: args.samples, report: &report };
    Ok(Outcome::new("validate-operator", seed, checks, &data))
}

pub const LIOUVILLE_IDENTITY_TOL: f64 = 1e-10;
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct FullspaceCase {
    n: usize,
    k: Option<usize>,
    params: BubbleParams,
    residuals: Residuals,
}

#[derive(Serialize)]
struct BoundaryCase {
    params: BubbleParams,
    c: f64,
    perturbation: f64,
    residuals: Residuals,
}

#[derive(Serialize)]
struct LiouvilleData {
    fullspace: Vec<FullspaceCase>,
    halfspace: Vec<BoundaryCase>,
    ball: Vec<BoundaryCase>,
}

fn centered_points(p: &BubbleParams, count: usize, rng: &mut Sampler) -> Vec<Vec<f64>> {
    let scale = 2.0 / p.beta.sqrt();
    (0..count)
        .map(|_| rng.ball(p.n, scale).iter().zip(&p.center).map(|(y, c)| y + c).collect())
        .collect()
}

/// Full-space bubbles, then half-space and ball bubbles with satisfied and
/// perturbed boundary constants.
pub fn liouville(args: &LiouvilleArgs, seed: u64) -> Result<Outcome> {
    if args.cases == 0 || args.points == 0 {
        return Err(Error::Domain("cases and points must be positive".into()));
    }
    let mut rng = Sampler::new(seed);
    let mut data = LiouvilleData { fullspace: Vec::new(), halfspace: Vec::new(), ball: Vec::new() };
    let mut r1_random = 0.0f64;
    let mut r1_norm = 0.0f64;
    let mut r2_norm = 0.0f64;
    for &n in &args.dims {
        need_dim(n)?;
        let probe = make_sigma_k_operator(n, 1)?;
        for _ in 0..args.cases {
            let a = rng.log_uniform(0.5, 2.0);
            let beta = rng.log_uniform(0.25, 4.0);
            let center: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let p = BubbleParams::new(n, a, beta, center)?;
            let pts = centered_points(&p, args.points, &mut rng);
            let residuals = verify_fullspace_at(&probe, &p, &pts)?;
            r1_random = r1_random.max(residuals.r1);
            data.fullspace.push(FullspaceCase { n, k: None, params: p, residuals });
        }
        for k in 1..=n {
            let op = make_sigma_k_operator(n, k)?;
            let a = rng.log_uniform(0.5, 2.0);
            // 2βa⁻² = μ* puts 2βa⁻²·e on the unit level set
            let beta = mu_star(&op)? * a * a / 2.0;
            let center: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let p = BubbleParams::new(n, a, beta, center)?;
            let pts = centered_points(&p, args.points, &mut rng);
            let residuals = verify_fullspace_at(&op, &p, &pts)?;
            r1_norm = r1_norm.max(residuals.r1);
            r2_norm = r2_norm.max(residuals.r2);
            data.fullspace.push(FullspaceCase { n, k: Some(k), params: p, residuals });
        }
    }

    let mut hs = [0.0f64; 2];
    let mut ball = [0.0f64; 2];
    let mut miss = 0.0f64;
    for &n in &args.dims {
        let nf = n as f64;
        for _ in 0..args.cases {
            let a = rng.log_uniform(0.5, 2.0);
            let beta = rng.log_uniform(0.25, 4.0);
            let center: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let p = BubbleParams::new(n, a, beta, center)?;
            let c = (nf - 2.0) / a * beta * p.center[n - 1];
            let delta = rng.uniform(-1.0, 1.0);
            for (perturbation, c) in [(0.0, c), (delta, c + delta)] {
                let residuals = halfspace_residual(&p, c)?;
                if perturbation == 0.0 {
                    hs[0] = hs[0].max(residuals.r1);
                    hs[1] = hs[1].max(residuals.r2);
                } else {
                    miss = miss.max((residuals.r2 - perturbation.abs()).abs());
                }
                data.halfspace.push(BoundaryCase { params: p.clone(), c, perturbation, residuals });
            }

            let a = rng.log_uniform(0.5, 2.0);
            let beta = rng.uniform(-0.9, 3.0);
            let p = BubbleParams::centered(n, a, beta)?;
            let c = ball_robin_constant(&p);
            let delta = rng.uniform(-1.0, 1.0);
            for (perturbation, c) in [(0.0, c), (delta, c + delta)] {
                let residuals = ball_robin_residual(&p, c)?;
                if perturbation == 0.0 {
                    ball[0] = ball[0].max(residuals.r1);
                    ball[1] = ball[1].max(residuals.r2);
                } else {
                    // the violation of ((n−2)/2)(1−β) + c·a = 0 is |δ|·a
                    miss = miss.max((residuals.r2 - perturbation.abs() * a).abs());
                }
                data.ball.push(BoundaryCase { params: p.clone(), c, perturbation, residuals });
            }
        }
    }
    // the half-space violation is |δ| itself
    let checks = vec![
        Check::le("fullspace_identity", r1_random.max(r1_norm), LIOUVILLE_IDENTITY_TOL),
        Check::le("sigma_k_normalization", r2_norm, NORMALIZATION_TOL),
        Check::le("halfspace_boundary", hs[0], LIOUVILLE_IDENTITY_TOL),
        Check::le("halfspace_constraint", hs[1], NORMALIZATION_TOL),
        Check::le("ball_boundary", ball[0], LIOUVILLE_IDENTITY_TOL),
        Check::le("ball_constraint", ball[1], NORMALIZATION_TOL),
        Check::le("violation_reported", miss, NORMALIZATION_TOL),
    ];
    Ok(Outcome::new("verify-liouville", seed, checks, &data))
}

pub const RADIAL_SINGLE_TOL: f64 = 1e-6;
pub const RADIAL_SUITE_TOL: f64 = 1e-5;
pub const RADIAL_CASES: [(usize, usize); 6] = [(3, 1), (3, 2), (3, 3), (4, 2), (5, 2), (5, 3)];
pub const RADIAL_V0: [f64; 3] = [0.5, 1.0, 2.0];
pub const ORDER_STEPS: [f64; 3] = [0.1, 0.05, 0.025];
pub const ORDER_R_MAX: f64 = 100.0;
pub const MIN_ORDER: f64 = 3.5;

#[derive(Serialize)]
struct ShootSummary {
    n: usize,
    k: usize,
    v0: f64,
    h: f64,
    r_max: f64,
    nodes: usize,
    status: ShootStatus,
    matched: BubbleParams,
    sup_error: f64,
}

fn shoot_case(n: usize, k: usize, v0: f64, h: f64, r_max: f64) -> Result<(ShootSummary, crate::radial::RadialProfile)> {
    need_dim(n)?;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let op = make_sigma_k_operator(n, k)?;
    let profile = shoot(&op, v0, r_max, h)?;
    let sup_error = compare_to_bubble(&profile)?;
    let matched = bubble_from_initial_conditions(v0, profile.vpp[0], n)?;
    let summary = ShootSummary {
        n,
        k,
        v0,
        h,
        r_max,
        nodes: profile.len(),
        status: profile.status,
        matched,
        sup_error,
    };
    Ok((summary, profile))
}

#[derive(Serialize)]
struct OrderData {
    steps: Vec<f64>,
    errors: Vec<f64>,
    orders: Vec<f64>,
}

#[derive(Serialize)]
struct RadialSuiteData {
    shots: Vec<ShootSummary>,
    order: OrderData,
}

/// Observed orders `log₂(e_h/e_{h/2})` for the `(3, 1)` shoot.
pub fn radial_orders() -> Result<(Vec<f64>, Vec<f64>)> {
    let mut errors = Vec::new();
    for h in ORDER_STEPS {
        errors.push(shoot_case(3, 1, 1.0, h, ORDER_R_MAX)?.0.sup_error);
    }
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((errors, orders))
}

pub fn radial(args: &RadialArgs, seed: u64, csv: bool) -> Result<Outcome> {
    match args.suite {
        None => {
            let (summary, profile) = shoot_case(args.n, args.k, args.v0, args.h, args.r_max)?;
            let checks = vec![
                Check::holds("complete", summary.status == ShootStatus::Complete),
                Check::le("sup_error", summary.sup_error, args.tol),
            ];
            let mut out = Outcome::new("radial-shoot", seed, checks, &summary);
            if csv {
                let mut buf = Vec::new();
                profile.write_csv(&mut buf).map_err(|e| Error::Domain(e.to_string()))?;
                out = out.with_file("profile.csv", buf);
            }
            Ok(out)
        }
        Some(RadialSuite::Uniqueness) => {
            let jobs: Vec<(usize, usize, f64)> =
                RADIAL_CASES.iter().flat_map(|&(n, k)| RADIAL_V0.iter().map(move |&v| (n, k, v))).collect();
            let shots = crate::parallel::par_map(&jobs, |&(n, k, v0)| shoot_case(n, k, v0, 1e-4, 0.9).map(|s| s.0))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let (errors, orders) = radial_orders()?;
            let worst = shots.iter().map(|s| s.sup_error).fold(0.0, f64::max);
            let mut checks = vec![
                Check::holds("all_complete", shots.iter().all(|s| s.status == ShootStatus::Complete)),
                Check::le("sup_error", worst, RADIAL_SUITE_TOL),
            ];
            for (i, p) in orders.iter().enumerate() {
                checks.push(Check::ge(format!("order_{i}"), *p, MIN_ORDER));
            }
            let data = RadialSuiteData { shots, order: OrderData { steps: ORDER_STEPS.to_vec(), errors, orders } };
            Ok(Outcome::new("radial-shoot", seed, checks, &data))
        }
    }
}

pub const LAMBDA_TOL: f64 = 1e-3;
pub const ALPHA_SPREAD_TOL: f64 = 1e-2;

/// Sweep configuration scaled to the bubble width `β^{−1/2}`.
pub fn sweep_config(n: usize, beta: f64, seed: u64) -> Result<SweepConfig> {
    let s = beta.powf(-0.5);
    SweepConfig::new(n, 0.05 * s, 5.0 * s, 60.0 * s, seed)
}

/// The 3×3 grid of centers with spacing `0.3·β^{−1/2}` in the first two coordinates.
pub fn sweep_centers(n: usize, beta: f64) -> Vec<Vec<f64>> {
    let step = 0.3 / beta.sqrt();
    let mut out = Vec::with_capacity(9);
    for i in -1..=1 {
        for j in -1..=1 {
            let mut x = vec![0.0; n];
            x[0] = i as f64 * step;
            x[1] = j as f64 * step;
            out.push(x);
        }
    }
    out
}

#[derive(Serialize)]
struct InvariantCase {
    beta: f64,
    lambda_bar_origin: f64,
    expected: f64,
    flag: RadiusFlag,
    alpha: AlphaReport,
}

pub fn moving_sphere(args: &MovingSphereArgs, seed: u64, sweep_csv: bool) -> Result<Outcome> {
    match args.suite {
        SphereSuite::Invariant => {
            need_dim(args.n)?;
            if args.betas.is_empty() || args.betas.iter().any(|b| !(*b > 0.0)) {
                return Err(Error::Domain("betas must be positive".into()));
            }
            let mut cases = Vec::new();
            let mut checks = Vec::new();
            let mut csv = Vec::new();
            for &beta in &args.betas {
                let u = BubbleField::new(BubbleParams::centered(args.n, 1.0, beta)?)?;
                let cfg = sweep_config(args.n, beta, seed)?;
                let origin = critical_radius(&u, &vec![0.0; args.n], &cfg)?;
                let expected = beta.powf(-0.5);
                let alpha = alpha_invariant(&u, &sweep_centers(args.n, beta), &cfg)?;
                let mean = alpha.values().iter().sum::<f64>() / alpha.entries.len() as f64;
                checks.push(Check::holds(format!("interior_beta_{beta}"), alpha.all_interior));
                checks.push(Check::le(
                    format!("lambda_bar_beta_{beta}"),
                    (origin.lambda_bar - expected).abs(),
                    LAMBDA_TOL * expected,
                ));
                checks.push(Check::le(format!("alpha_spread_beta_{beta}"), alpha.spread, ALPHA_SPREAD_TOL * mean));
                if sweep_csv {
                    let mut buf = Vec::new();
                    alpha.write_sweep_csv(&mut buf).map_err(|e| Error::Domain(e.to_string()))?;
                    csv.push((format!("sweep_beta_{beta}.csv"), buf));
                }
                cases.push(InvariantCase { beta, lambda_bar_origin: origin.lambda_bar, expected, flag: origin.flag, alpha });
            }
            let mut out = Outcome::new("moving-sphere", seed, checks, &cases);
            for (name, bytes) in csv {
                out = out.with_file(name, bytes);
            }
            Ok(out)
        }
        SphereSuite::GradientLemma => {
            let report: LemmaSuiteReport = lemma_suite(args.h_functions, seed)?;
            let worst_slack = report
                .gradient_cases
                .iter()
                .filter(|c| c.report.asserted)
                .map(|c| c.report.slack)
                .fold(f64::INFINITY, f64::min);
            let checks = vec![
                Check::eq("h_cases", report.h_cases.len() as f64, args.h_functions as f64),
                Check::eq("implication_violations", report.implication_violations as f64, 0.0),
                Check::ge("gradient_asserted", report.gradient_asserted as f64, 1.0),
                Check::eq("gradient_violations", report.gradient_violations as f64, 0.0),
                Check::ge("gradient_min_slack", worst_slack, -crate::moving_sphere::GRADIENT_BOUND_TOL),
            ];
            Ok(Outcome::new("moving-sphere", seed, checks, &report))
        }
    }
}

pub const RESCALING_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct HarnackCase {
    params: BubbleParams,
    report: HarnackReport,
}

#[derive(Serialize)]
struct HarnackData {
    n: usize,
    constant_exact: Option<u128>,
    constant: f64,
    cases: Vec<HarnackCase>,
}

/// Bubbles solving `σ₁(λ(A^u)) = 1` in `ℝ³`: `3·2βa⁻² = 1`.
pub fn harnack_catalog(n: usize) -> Result<Vec<BubbleParams>> {
    let op = make_sigma_power_operator(n, 1, 1.0)?;
    let level = mu_star(&op)?;
    let mut out = Vec::new();
    for beta in [0.01, 0.1, 1.0, 10.0, 100.0] {
        for shift in [0.0, 0.5, 1.5, 3.0] {
            let mut center = vec![0.0; n];
            center[0] = shift;
            out.push(BubbleParams::new(n, (2.0 * beta / level).sqrt(), beta, center)?);
        }
    }
    Ok(out)
}

pub fn harnack(args: &HarnackArgs, seed: u64) -> Result<Outcome> {
    need_dim(args.n)?;
    let constant_exact = harnack_constant_exact(args.n);
    let constant = harnack_constant(args.n)?;
    let mut checks = Vec::new();
    if args.n == 3 {
        checks.push(Check::holds("constant_exact", constant_exact == Some(165_888)));
    }
    checks.push(Check::holds(
        "constant_float_matches",
        constant_exact.map_or(true, |c| c as f64 == constant),
    ));
    let mut cases = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for (i, p) in harnack_catalog(args.n)?.into_iter().enumerate() {
        let u = BubbleField::new(p.clone())?;
        let report = harnack_product(&u, args.radius, args.delta, seed.wrapping_add(i as u64))?;
        worst_ratio = worst_ratio.max(report.product / report.bound);
        worst_scaling = worst_scaling.max(report.rescaling_exactness);
        cases.push(HarnackCase { params: p, report });
    }
    checks.push(Check::le("product_over_bound", worst_ratio, 1.0));
    checks.push(Check::le("rescaling_identity", worst_scaling, RESCALING_TOL));
    let data = HarnackData { n: args.n, constant_exact, constant, cases };
    Ok(Outcome::new("harnack", seed, checks, &data))
}

pub const HOMOGENIZE_TOL: f64 = 1e-10;
pub const HOMOGENEITY_TOL: f64 = 1e-9;
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Serialize)]
struct HomogenizeData<'a> {
    operator: &'a str,
    n: usize,
    samples: usize,
    triples: usize,
    max_gap: f64,
    max_homogeneity_error: f64,
    max_level_error: f64,
    level_sign_mismatches: usize,
    worst_concavity: f64,
}

/// `f̃` built from `σ_k` by ray root-finding, against the closed form `σ_k^{1/k}`.
pub fn homogenize_cmd(args: &HomogenizeArgs, seed: u64) -> Result<Outcome> {
    need_dim(args.n)?;
    let op = parse_operator(&args.op, args.n)?;
    let k: usize = args.op.trim_start_matches("sigma").trim_end_matches("-root").parse().map_err(|_| {
        Error::Domain(format!("cannot read k from {:?}", args.op))
    })?;
    let tilde = homogenize(&op);
    let exact = make_sigma_k_operator(args.n, k)?;
    let mut rng = Sampler::new(seed);
    let pts = sample_cone(&op, args.samples, &mut rng);
    let mut gap = 0.0f64;
    let mut homog = 0.0f64;
    let mut level = 0.0f64;
    let mut mismatches = 0;
    for l in &pts {
        let ft = tilde.value(l)?;
        let fe = exact.value(l)?;
        gap = gap.max((ft - fe).abs() / fe.max(1.0));
        let s = rng.log_uniform(0.1, 10.0);
        let sl: Vec<f64> = l.iter().map(|v| v * s).collect();
        homog = homog.max((tilde.value(&sl)? - s * ft).abs() / (s * ft).max(1.0));
        let on: Vec<f64> = l.iter().map(|v| v / fe).collect();
        level = level.max((tilde.value(&on)? - 1.0).abs());
        let raw = op.value(l)? - 1.0;
        if raw.abs() > 1e-9 && (raw > 0.0) != (ft > 1.0) {
            mismatches += 1;
        }
    }
    let mut concavity = f64::NEG_INFINITY;
    let cone_pts = sample_cone(&op, 2 * args.triples, &mut rng);
    for pair in cone_pts.chunks(2) {
        let t = rng.uniform(0.0, 1.0);
        let mix: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = tilde.value(&mix)?;
        let rhs = t * tilde.value(&pair[0])? + (1.0 - t) * tilde.value(&pair[1])?;
        concavity = concavity.max((rhs - lhs) / rhs.abs().max(1.0));
    }
    let checks = vec![
        Check::le("gap_to_closed_form", gap, HOMOGENIZE_TOL),
        Check::le("degree_one", homog, HOMOGENEITY_TOL),
        Check::le("level_set", level, HOMOGENIZE_TOL),
        Check::eq("level_sign_mismatches", mismatches as f64, 0.0),
        Check::le("concavity", concavity, CONCAVITY_TOL),
    ];
    let data = HomogenizeData {
        operator: op.name(),
        n: args.n,
        samples: pts.len(),
        triples: args.triples,
        max_gap: gap,
        max_homogeneity_error: homog,
        max_level_error: level,
        level_sign_mismatches: mismatches,
        worst_concavity: concavity,
    };
    Ok(Outcome::new("homogenize", seed, checks, &data))
}

pub const YAMABE_SOLUTION_TOL: f64 = 1e-6;
pub const JACOBIAN_TOL: f64 = 1e-5;

#[derive(Serialize)]
struct YamabeData {
    n: usize,
    k: usize,
    length: f64,
    nodes: usize,
    t_steps: usize,
    amplitude: f64,
    c_star: f64,
    steps: Vec<ContinuationStep>,
    failure: Option<String>,
    max_deviation: f64,
    jacobian_rel_error_start: f64,
    jacobian_rel_error_solution: f64,
}

fn jacobian_gap(op: &CurvatureOperator, g: &PeriodicGrid) -> Result<f64> {
    let a = jacobian(op, g)?;
    let b = fd_jacobian(op, g)?;
    Ok((&a - &b).norm() / b.norm())
}

pub fn yamabe(args: &YamabeArgs, seed: u64, csv: bool) -> Result<Outcome> {
    need_dim(args.n)?;
    let op = parse_operator(&format!("sigma{}-root", args.k), args.n)?;
    let c_star = constant_solution(&op)?;
    let two_pi = 2.0 * std::f64::consts::PI / args.length;
    let g0 = PeriodicGrid::from_fn(args.length, args.nodes, args.scheme, |t| {
        c_star * (1.0 + args.amplitude * (two_pi * t).sin())
    })?;
    let opts = NewtonOptions { tol: args.tol, ..NewtonOptions::default() };
    let trace = continuation(&op, &g0, args.t_steps, &opts)?;
    // a small perturbation keeps every node inside the cone for the oracle
    let near = PeriodicGrid::from_fn(args.length, args.nodes, args.scheme, |t| {
        c_star * (1.0 + 0.002 * (two_pi * t).sin())
    })?;
    let jac_start = jacobian_gap(&op, &near)?;
    let (deviation, jac_sol) = match &trace.solution {
        Some(u) => (u.values().iter().map(|v| (v - c_star).abs()).fold(0.0, f64::max), jacobian_gap(&op, u)?),
        None => (f64::INFINITY, f64::INFINITY),
    };
    let checks = vec![
        Check::holds("continuation_converged", trace.succeeded()),
        Check::le("deviation_from_constant", deviation, YAMABE_SOLUTION_TOL),
        Check::le("jacobian_vs_fd_start", jac_start, JACOBIAN_TOL),
        Check::le("jacobian_vs_fd_solution", jac_sol, JACOBIAN_TOL),
    ];
    let data = YamabeData {
        n: args.n,
        k: args.k,
        length: args.length,
        nodes: args.nodes,
        t_steps: args.t_steps,
        amplitude: args.amplitude,
        c_star,
        steps: trace.steps.clone(),
        failure: trace.failure.clone(),
        max_deviation: deviation,
        jacobian_rel_error_start: jac_start,
        jacobian_rel_error_solution: jac_sol,
    };
    let mut jsonl = Vec::new();
    for r in &trace.records {
        jsonl.extend(to_json_bytes(r));
    }
    let mut out = Outcome::new("solve-yamabe", seed, checks, &data).with_file("trace.jsonl", jsonl);
    if csv {
        if let Some(u) = &trace.solution {
            let mut buf = Vec::new();
            u.write_csv(&mut buf).map_err(|e| Error::Domain(e.to_string()))?;
            out = out.with_file("solution.csv", buf);
        }
    }
    Ok(out)
}

pub const CONJUGATION_ANALYTIC_TOL: f64 = 1e-8;
pub const CONJUGATION_FD_TOL: f64 = 1e-4;
pub const FD_ORDER_RANGE: (f64, f64) = (1.8, 2.2);

pub fn conjugation(args: &ConjugationArgs, seed: u64) -> Result<Outcome> {
    need_dim(args.n)?;
    if !(args.h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {}", args.h)));
    }
    let steps = [4.0 * args.h, 2.0 * args.h, args.h];
    let report: ConjugationReport = conjugation_suite(args.n, args.words, args.points, &steps, seed)?;
    let checks = vec![
        Check::le("analytic", report.analytic_max, CONJUGATION_ANALYTIC_TOL),
        Check::le("finite_difference", report.fd_max[2], CONJUGATION_FD_TOL),
        Check::ge("fd_order_low", report.fd_order, FD_ORDER_RANGE.0),
        Check::le("fd_order_high", report.fd_order, FD_ORDER_RANGE.1),
    ];
    Ok(Outcome::new("conjugation-test", seed, checks, &report))
}
