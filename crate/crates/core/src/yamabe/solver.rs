use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::conformal::{product_background, product_eigen_pair};
use crate::error::{Error, Result};
use crate::operators::{elementary_symmetric, homotopy_operator, homotopy_t_derivative, CurvatureOperator};

use super::grid::PeriodicGrid;

fn eigen_vector(n: usize, lt: f64, ls: f64) -> Vec<f64> {
    let mut e = vec![ls; n];
    e[0] = lt;
    e
}

/// `λ(A_ĝ)` at every node.
pub fn node_eigenvalues(n: usize, g: &PeriodicGrid) -> Result<Vec<Vec<f64>>> {
    let p = g.first_derivative();
    let q = g.second_derivative();
    (0..g.len())
        .map(|j| {
            let (lt, ls) = product_eigen_pair(n, g.values()[j], p[j], q[j])?;
            Ok(eigen_vector(n, lt, ls))
        })
        .collect()
}

fn cone_gate(op: &CurvatureOperator, eig: &[Vec<f64>]) -> Result<()> {
    let bad: Vec<usize> = (0..eig.len()).filter(|j| !op.contains(&eig[*j])).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::ConeExit {
            eigenvalues: bad.iter().map(|j| eig[*j].clone()).collect(),
            nodes: bad,
        })
    }
}

/// `f(λ(A_ĝ)) − 1` per node.
pub fn residual(op: &CurvatureOperator, g: &PeriodicGrid) -> Result<DVector<f64>> {
    let eig = node_eigenvalues(op.n(), g)?;
    cone_gate(op, &eig)?;
    let r: Result<Vec<f64>> = eig.iter().map(|l| op.value(l).map(|f| f - 1.0)).collect();
    Ok(DVector::from_vec(r?))
}

/// Partial derivatives of `(λ_t, λ_s)` in `(v, v′, v″)`.
fn eigen_partials(n: usize, v: f64, p: f64, q: f64) -> ([f64; 3], [f64; 3]) {
    let nf = n as f64;
    let m = nf - 2.0;
    let w = v.powf(-4.0 / m);
    let dw = -4.0 / m * w / v;
    let ct = 2.0 * (nf - 1.0) / (m * m);
    let cs = 2.0 / (m * m);
    let bt = -2.0 / m * q / v + ct * (p / v).powi(2) - 0.5;
    let bs = -cs * (p / v).powi(2) + 0.5;
    let dt = [
        dw * bt + w * (2.0 / m * q / (v * v) - 2.0 * ct * p * p / v.powi(3)),
        w * 2.0 * ct * p / (v * v),
        w * (-2.0 / m / v),
    ];
    let ds = [dw * bs + w * 2.0 * cs * p * p / v.powi(3), -w * 2.0 * cs * p / (v * v), 0.0];
    (dt, ds)
}

/// Assemble `∂r_i/∂u_j` from `(∂f/∂λ_t, Σ∂f/∂λ_s)` per node.
fn assemble_jacobian(n: usize, g: &PeriodicGrid, weights: &[(f64, f64)]) -> DMatrix<f64> {
    let p = g.first_derivative();
    let q = g.second_derivative();
    let size = g.len();
    let mut jac = DMatrix::zeros(size, size);
    for i in 0..size {
        let (ft, fs) = weights[i];
        let (dt, ds) = eigen_partials(n, g.values()[i], p[i], q[i]);
        let c: Vec<f64> = (0..3).map(|k| ft * dt[k] + fs * ds[k]).collect();
        for j in 0..size {
            jac[(i, j)] = c[1] * g.d1()[(i, j)] + c[2] * g.d2()[(i, j)];
        }
        jac[(i, i)] += c[0];
    }
    jac
}

/// `∂r_i/∂u_j` by the chain rule through the two eigenvalue formulas and the
/// differentiation matrices.
pub fn jacobian(op: &CurvatureOperator, g: &PeriodicGrid) -> Result<DMatrix<f64>> {
    let n = op.n();
    let eig = node_eigenvalues(n, g)?;
    cone_gate(op, &eig)?;
    let weights = eig
        .iter()
        .map(|l| {
            let grad = op.gradient(l)?;
            Ok((grad[0], grad[1..].iter().sum()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_jacobian(n, g, &weights))
}

/// Five-point central-difference Jacobian with step `1e-6·‖u‖∞`.
pub fn fd_jacobian(op: &CurvatureOperator, g: &PeriodicGrid) -> Result<DMatrix<f64>> {
    let size = g.len();
    let h = 1e-6 * g.values().amax();
    let mut jac = DMatrix::zeros(size, size);
    let at = |j: usize, k: f64| -> Result<DVector<f64>> {
        let mut v = g.values().clone();
        v[j] += k * h;
        residual(op, &g.with_values(v)?)
    };
    for j in 0..size {
        let col = (at(j, -2.0)? - at(j, 2.0)? + (at(j, 1.0)? - at(j, -1.0)?) * 8.0) / (12.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Refuse operators whose cone does not contain `λ(A_g)` of the background.
pub fn check_admissible(op: &CurvatureOperator) -> Result<()> {
    let n = op.n();
    let bg = product_background(n)?;
    if op.contains(&bg) {
        return Ok(());
    }
    let s = elementary_symmetric(&bg);
    Err(Error::Inadmissible(format!(
        "{} : the background eigenvalues (-1/2, 1/2, ..., 1/2) of S^1 x S^{} lie outside the cone \
         (sigma_1..sigma_n = {:?})",
        op.name(),
        n - 1,
        &s[1..]
    )))
}

/// `c* = f(λ(A_g))^{(n−2)/4}`, the constant solution for degree-one `f`.
pub fn constant_solution(op: &CurvatureOperator) -> Result<f64> {
    let n = op.n() as f64;
    Ok(op.value(&product_background(op.n())?)?.powf((n - 2.0) / 4.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step fraction before backtracking.
    pub damping: f64,
    pub min_step: f64,
    /// Iterates are clipped below at this fraction of `min(u₀)`.
    pub floor_fraction: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, damping: 1.0, min_step: 1e-4, floor_fraction: 0.1 }
    }
}

/// One Newton iteration, as written to the JSON Lines trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterRecord {
    pub t: f64,
    pub iter: usize,
    pub residual_inf: f64,
    pub step_norm: f64,
    pub min_cone_margin: f64,
}

#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub grid: PeriodicGrid,
    pub iterations: usize,
    pub residual_inf: f64,
    pub records: Vec<IterRecord>,
}

impl NewtonSolution {
    /// Least-squares slope of `log r_{k+1}` against `log r_k` over the last
    /// three iterations whose residuals stay above the rounding floor.
    pub fn convergence_order(&self) -> Option<f64> {
        let r: Vec<f64> = self.records.iter().map(|x| x.residual_inf).filter(|v| *v > 1e-13).collect();
        if r.len() < 3 {
            return None;
        }
        let tail = &r[r.len().saturating_sub(4)..];
        let pairs: Vec<(f64, f64)> = tail.windows(2).map(|w| (w[0].ln(), w[1].ln())).collect();
        let k = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// A discretized equation Newton can work on.
trait System {
    fn residual(&self, g: &PeriodicGrid) -> Result<DVector<f64>>;
    fn jacobian(&self, g: &PeriodicGrid) -> Result<DMatrix<f64>>;
    fn margin(&self, g: &PeriodicGrid) -> f64;
}

/// `f(λ) = 1` with the cone constraint enforced at every node.
struct Gated<'a>(&'a CurvatureOperator);

impl System for Gated<'_> {
    fn residual(&self, g: &PeriodicGrid) -> Result<DVector<f64>> {
        residual(self.0, g)
    }
    fn jacobian(&self, g: &PeriodicGrid) -> Result<DMatrix<f64>> {
        jacobian(self.0, g)
    }
    fn margin(&self, g: &PeriodicGrid) -> f64 {
        min_margin(self.0, g)
    }
}

/// `f(e)·σ_1(λ) = 1` everywhere: the `t = 0` equation of a degree-one `f`,
/// extended linearly past `{σ_1 = 0}` so that Newton may start outside the cone.
struct SemilinearStart<'a> {
    op: &'a CurvatureOperator,
    scale: f64,
}

impl System for SemilinearStart<'_> {
    fn residual(&self, g: &PeriodicGrid) -> Result<DVector<f64>> {
        let eig = node_eigenvalues(self.op.n(), g)?;
        Ok(DVector::from_iterator(eig.len(), eig.iter().map(|l| self.scale * l.iter().sum::<f64>() - 1.0)))
    }
    fn jacobian(&self, g: &PeriodicGrid) -> Result<DMatrix<f64>> {
        let n = self.op.n();
        let w = vec![(self.scale, self.scale * (n as f64 - 1.0)); g.len()];
        Ok(assemble_jacobian(n, g, &w))
    }
    fn margin(&self, g: &PeriodicGrid) -> f64 {
        min_margin(self.op, g)
    }
}

fn min_margin(op: &CurvatureOperator, g: &PeriodicGrid) -> f64 {
    match node_eigenvalues(op.n(), g) {
        Ok(eig) => eig.iter().map(|l| op.cone().margin(l)).fold(f64::INFINITY, f64::min),
        Err(_) => f64::NAN,
    }
}

fn newton_core(sys: &dyn System, g0: &PeriodicGrid, opts: &NewtonOptions, t: f64, floor: f64) -> Result<NewtonSolution> {
    let mut u = g0.clone();
    let mut r = sys.residual(&u)?;
    let mut history: Vec<f64> = Vec::new();
    let mut records = Vec::new();
    let mut step_norm = 0.0;
    for iter in 0..=opts.max_iter {
        let rinf = r.amax();
        records.push(IterRecord { t, iter, residual_inf: rinf, step_norm, min_cone_margin: sys.margin(&u) });
        history.push(rinf);
        if rinf <= opts.tol {
            return Ok(NewtonSolution { grid: u, iterations: iter, residual_inf: rinf, records });
        }
        let stalled = history.len() > 5 && rinf > (1.0 - 1e-3) * history[history.len() - 6];
        if iter == opts.max_iter || stalled {
            break;
        }
        let jac = sys.jacobian(&u)?;
        let delta = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::NonConvergence(format!("singular Jacobian at iteration {iter}")))?;
        let r2 = r.norm();
        let mut alpha = opts.damping;
        let mut accepted = None;
        while alpha >= opts.min_step {
            let cand = (u.values() + &delta * alpha).map(|v| v.max(floor));
            if let Ok(next) = u.with_values(cand) {
                if let Ok(rn) = sys.residual(&next) {
                    if rn.norm() < r2 {
                        accepted = Some((next, rn));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((next, rn)) = accepted else {
            break;
        };
        step_norm = (next.values() - u.values()).amax();
        u = next;
        r = rn;
    }
    Err(Error::Stagnation {
        iterations: records.len() - 1,
        residual: r.amax(),
        iterate: u.values().iter().copied().collect(),
    })
}

/// Damped Newton with backtracking on `‖r‖₂` and clipping at
/// `floor_fraction·min(u₀)`.
pub fn newton_solve(op: &CurvatureOperator, g0: &PeriodicGrid, opts: &NewtonOptions) -> Result<NewtonSolution> {
    check_admissible(op)?;
    let floor = opts.floor_fraction * g0.values().min();
    newton_core(&Gated(op), g0, opts, 1.0, floor)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    pub min_cone_margin: f64,
}

#[derive(Clone, Debug)]
pub struct ContinuationTrace {
    pub steps: Vec<ContinuationStep>,
    pub records: Vec<IterRecord>,
    pub solution: Option<PeriodicGrid>,
    pub failure: Option<String>,
}

impl ContinuationTrace {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.solution.is_some()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Solve `f_t(λ(A_ĝ)) = 1` on a uniform grid of `t_steps` values of `t` from
/// 0 to 1, warm-starting each step with a tangent predictor.
pub fn continuation(op: &CurvatureOperator, g0: &PeriodicGrid, t_steps: usize, opts: &NewtonOptions) -> Result<ContinuationTrace> {
    check_admissible(op)?;
    if t_steps < 2 {
        return Err(Error::Domain(format!("need at least two t values, got {t_steps}")));
    }
    let floor = opts.floor_fraction * g0.values().min();
    let ts: Vec<f64> = (0..t_steps).map(|i| i as f64 / (t_steps - 1) as f64).collect();
    let mut trace = ContinuationTrace { steps: Vec::new(), records: Vec::new(), solution: None, failure: None };
    let mut current: Option<(f64, PeriodicGrid)> = None;
    let mut previous: Option<(f64, PeriodicGrid)> = None;
    for &t in &ts {
        let op_t = homotopy_operator(op, t)?;
        let attempt = match &current {
            None if op.homogeneous_degree() == Some(1.0) => {
                let scale = op.value(&vec![1.0; op.n()])?;
                newton_core(&SemilinearStart { op, scale }, g0, opts, t, floor).and_then(|sol| {
                    // the accepted start must lie in the cone and solve the gated equation
                    let r = residual(&op_t, &sol.grid)?.amax();
                    if r <= opts.tol {
                        Ok(sol)
                    } else {
                        Err(Error::NonConvergence(format!("semilinear start leaves residual {r:e}")))
                    }
                })
            }
            None => newton_core(&Gated(&op_t), g0, opts, t, floor),
            Some((t_prev, u_prev)) => {
                let guess = predict(op, (*t_prev, u_prev), previous.as_ref(), t - t_prev, floor)
                    .unwrap_or_else(|| u_prev.clone());
                newton_core(&Gated(&op_t), &guess, opts, t, floor)
            }
        };
        match attempt {
            Ok(sol) => {
                for mut rec in sol.records.iter().copied() {
                    rec.t = t;
                    trace.records.push(rec);
                }
                trace.steps.push(ContinuationStep {
                    t,
                    iterations: sol.iterations,
                    residual: sol.residual_inf,
                    min_cone_margin: min_margin(&op_t, &sol.grid),
                });
                previous = current.replace((t, sol.grid));
            }
            Err(e) => {
                trace.failure = Some(format!("t = {t}: {e}"));
                return Ok(trace);
            }
        }
    }
    trace.solution = current.map(|(_, g)| g);
    Ok(trace)
}

/// `u + Δt·u̇` with `J u̇ = −∂F/∂t`, plus the quadratic term through the
/// solution before `u` when there is one.
fn predict(
    op: &CurvatureOperator,
    (t, u): (f64, &PeriodicGrid),
    older: Option<&(f64, PeriodicGrid)>,
    dt: f64,
    floor: f64,
) -> Option<PeriodicGrid> {
    let op_t = homotopy_operator(op, t).ok()?;
    let jac = jacobian(&op_t, u).ok()?;
    let eig = node_eigenvalues(op.n(), u).ok()?;
    let ft: Vec<f64> = eig.iter().map(|l| homotopy_t_derivative(op, t, l)).collect::<Result<_>>().ok()?;
    let udot = jac.lu().solve(&(-DVector::from_vec(ft)))?;
    let mut step = &udot * dt;
    if let Some((t_old, u_old)) = older {
        let back = t - t_old;
        let curvature = (u_old.values() - u.values() + &udot * back) / (back * back);
        step += curvature * (dt * dt);
    }
    let next = u.with_values((u.values() + step).map(|v| v.max(floor))).ok()?;
    let op_next = homotopy_operator(op, (t + dt).min(1.0)).ok()?;
    residual(&op_next, &next).ok()?;
    Some(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::make_sigma_k_operator;
    use crate::yamabe::grid::Scheme;
    use std::f64::consts::PI;

    fn perturbed(c: f64, eps: f64, nodes: usize, scheme: Scheme) -> PeriodicGrid {
        PeriodicGrid::from_fn(1.0, nodes, scheme, |t| c * (1.0 + eps * (2.0 * PI * t).sin())).unwrap()
    }

    #[test]
    fn residual_examples() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let c = 2f64.powf(-3.0 / 8.0);
        let g = PeriodicGrid::constant(1.0, 64, Scheme::Spectral, c).unwrap();
        let r0 = residual(&op, &g).unwrap();
        assert!(r0.amax() <= 1e-12, "{r0:?} {:?}", g.second_derivative());
        let one = PeriodicGrid::constant(1.0, 64, Scheme::Spectral, 1.0).unwrap();
        for r in residual(&op, &one).unwrap().iter() {
            assert!((r - (0.5f64.sqrt() - 1.0)).abs() < 1e-14);
        }
        let op1 = make_sigma_k_operator(4, 1).unwrap();
        assert!((constant_solution(&op1).unwrap() - 1.0).abs() < 1e-15);
        assert!((constant_solution(&op).unwrap() - c).abs() < 1e-15);
    }

    #[test]
    fn cone_exit_lists_nodes() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let g = PeriodicGrid::from_fn(1.0, 16, Scheme::Spectral, |t| 1.0 + 0.9 * (2.0 * PI * 3.0 * t).sin()).unwrap();
        match residual(&op, &g) {
            Err(Error::ConeExit { nodes, eigenvalues }) => {
                assert!(!nodes.is_empty());
                assert_eq!(nodes.len(), eigenvalues.len());
            }
            other => panic!("expected cone exit, got {other:?}"),
        }
    }

    #[test]
    fn jacobian_matches_fd() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        for (scheme, nodes) in [(Scheme::Spectral, 32), (Scheme::Spectral, 64), (Scheme::FiniteDifference4, 64)] {
            let g = perturbed(0.8, 0.002, nodes, scheme);
            let a = jacobian(&op, &g).unwrap();
            let b = fd_jacobian(&op, &g).unwrap();
            let rel = (&a - &b).norm() / b.norm();
            assert!(rel <= 1e-5, "{rel}");
        }
    }

    #[test]
    fn jacobian_at_constant() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let c = 0.9;
        let g = PeriodicGrid::constant(1.0, 32, Scheme::Spectral, c).unwrap();
        let j = jacobian(&op, &g).unwrap();
        let size = g.len();
        let mut asym = 0.0f64;
        for i in 0..size {
            for k in 0..size {
                asym = asym.max((j[(i, k)] - j[((i + 1) % size, (k + 1) % size)]).abs());
            }
        }
        assert!(asym <= 1e-10, "{asym}");
        // d/dc f(c^{-4/(n-2)} λ_g)
        let bg = product_background(5).unwrap();
        let f0 = op.value(&bg).unwrap();
        let expect = -4.0 / 3.0 * c.powf(-4.0 / 3.0 - 1.0) * f0;
        for i in 0..size {
            let s: f64 = j.row(i).sum();
            assert!((s - expect).abs() <= 1e-8, "{s} {expect}");
        }
    }

    #[test]
    fn newton_from_perturbation() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let c = 2f64.powf(-3.0 / 8.0);
        // a 10% mode-one perturbation is outside the cone on half the circle
        assert!(matches!(
            newton_solve(&op, &perturbed(c, 0.1, 64, Scheme::Spectral), &NewtonOptions::default()),
            Err(Error::ConeExit { .. })
        ));
        let sol = newton_solve(&op, &perturbed(c, 0.002, 64, Scheme::Spectral), &NewtonOptions::default()).unwrap();
        assert!(sol.iterations <= 12, "{}", sol.iterations);
        assert!(sol.grid.values().iter().all(|v| (v - c).abs() <= 1e-6));
        let order = sol.convergence_order().unwrap();
        assert!(order >= 1.8, "{order}");
        let exact = PeriodicGrid::constant(1.0, 64, Scheme::Spectral, c).unwrap();
        assert_eq!(newton_solve(&op, &exact, &NewtonOptions::default()).unwrap().iterations, 0);
    }

    #[test]
    fn newton_translation_equivariance() {
        let op = make_sigma_k_operator(6, 2).unwrap();
        let g = PeriodicGrid::from_fn(1.0, 32, Scheme::Spectral, |t| 0.8 + 0.002 * (2.0 * PI * t).cos() + 0.0005 * (4.0 * PI * t).sin()).unwrap();
        let opts = NewtonOptions::default();
        let a = newton_solve(&op, &g, &opts).unwrap().grid.rotated(5);
        let b = newton_solve(&op, &g.rotated(5), &opts).unwrap().grid;
        assert!((a.values() - b.values()).amax() <= 1e-8);
    }

    #[test]
    fn admissibility_guard() {
        let op = make_sigma_k_operator(4, 2).unwrap();
        let g = PeriodicGrid::constant(1.0, 16, Scheme::Spectral, 1.0).unwrap();
        assert!(matches!(newton_solve(&op, &g, &NewtonOptions::default()), Err(Error::Inadmissible(_))));
        assert!(matches!(continuation(&op, &g, 5, &NewtonOptions::default()), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn continuation_k2() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let c = 2f64.powf(-3.0 / 8.0);
        let g0 = perturbed(c, 0.1, 64, Scheme::Spectral);
        let opts = NewtonOptions::default();
        let trace = continuation(&op, &g0, 11, &opts).unwrap();
        assert!(trace.succeeded(), "{:?}", trace.failure);
        assert_eq!(trace.steps.len(), 11);
        let u = trace.solution.as_ref().unwrap();
        let direct = newton_solve(&op, &perturbed(c, 0.002, 64, Scheme::Spectral), &opts).unwrap();
        assert!((u.values() - direct.grid.values()).amax() <= 1e-8);
        assert!(u.values().iter().all(|v| (v - c).abs() <= 1e-6));
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), trace.records.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert!(first.get("min_cone_margin").is_some());
    }

    #[test]
    fn continuation_sigma1_steps() {
        let op = make_sigma_k_operator(5, 1).unwrap();
        let g0 = perturbed(1.0, 0.1, 64, Scheme::Spectral);
        let trace = continuation(&op, &g0, 11, &NewtonOptions::default()).unwrap();
        assert!(trace.succeeded(), "{:?}", trace.failure);
        let iters: Vec<usize> = trace.steps.iter().map(|s| s.iterations).collect();
        assert!(iters[1..].iter().all(|k| *k <= 2), "{iters:?}");
        let c = constant_solution(&op).unwrap();
        assert!(trace.solution.unwrap().values().iter().all(|v| (v - c).abs() <= 1e-9));
    }

    #[test]
    fn continuation_coarse_is_clean() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let g0 = perturbed(0.77, 0.1, 32, Scheme::Spectral);
        let opts = NewtonOptions::default();
        let trace = continuation(&op, &g0, 2, &opts).unwrap();
        if let Some(u) = &trace.solution {
            assert!(residual(&op, u).unwrap().amax() <= opts.tol);
        } else {
            assert!(trace.failure.is_some());
        }
    }

    #[test]
    fn refinement_changes_little() {
        let op = make_sigma_k_operator(5, 2).unwrap();
        let opts = NewtonOptions::default();
        let a = newton_solve(&op, &perturbed(0.8, 0.002, 32, Scheme::Spectral), &opts).unwrap().grid;
        let b = newton_solve(&op, &perturbed(0.8, 0.002, 64, Scheme::Spectral), &opts).unwrap().grid;
        for j in 0..a.len() {
            assert!((a.values()[j] - b.values()[2 * j]).abs() <= 1e-8);
        }
    }
}
