use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::exact::BubbleParams;
use crate::sampling::Sampler;

use super::field::{jet_at, pullback_u, DerivativeMode, FieldSpec, ScalarField};
use super::moebius::{Generator, MoebiusMap};
use super::schouten::schouten_eigen_flat;

/// `max_x ‖λ(A^{u_ψ})(x) − λ(A^u)(ψ(x))‖∞` over the samples.
pub fn conjugation_residual(
    u: Arc<dyn ScalarField>,
    psi: &MoebiusMap,
    samples: &[Vec<f64>],
    mode: DerivativeMode,
) -> Result<f64> {
    let pulled = pullback_u(u.clone(), psi)?;
    let mut worst = 0.0f64;
    for x in samples {
        let lhs = schouten_eigen_flat(pulled.as_ref(), x, mode)?;
        let rhs = schouten_eigen_flat(u.as_ref(), &psi.apply(x)?, mode)?;
        worst = worst.max(lhs.sorted_distance(&rhs));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperharmonicReport {
    pub max_laplacian: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Vec<f64>,
}

/// `Δu ≤ tol` on the samples; tolerance `1e-8` analytic, `1e-4` otherwise.
pub fn superharmonic_check(u: &dyn ScalarField, samples: &[Vec<f64>], mode: DerivativeMode) -> Result<SuperharmonicReport> {
    let tolerance = match mode {
        DerivativeMode::Analytic => 1e-8,
        DerivativeMode::FiniteDifference { .. } => 1e-4,
    };
    let mut max_laplacian = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for x in samples {
        let lap = jet_at(u, x, mode)?.laplacian();
        if lap > max_laplacian {
            max_laplacian = lap;
            witness = x.clone();
        }
    }
    Ok(SuperharmonicReport {
        max_laplacian,
        tolerance,
        pass: max_laplacian <= tolerance,
        witness,
    })
}

/// A word of one to four generators; about a third of them are inversions.
pub fn random_moebius(n: usize, rng: &mut Sampler) -> MoebiusMap {
    let len = 1 + rng.index(4);
    let word = (0..len)
        .map(|_| match rng.index(3) {
            0 => Generator::Translate(rng.ball(n, 2.0)),
            1 => Generator::Scale(rng.log_uniform(0.5, 2.0)),
            _ => Generator::Invert,
        })
        .collect();
    MoebiusMap::new(n, word).expect("generated words are valid")
}

/// Smooth positive fields used by the conjugation and moving-sphere suites.
pub fn catalog_fields(n: usize) -> Vec<FieldSpec> {
    let mut off = vec![0.0; n];
    off[0] = 0.4;
    let bubble = BubbleParams { n, a: 1.3, beta: 0.7, center: off.clone() };
    vec![
        FieldSpec::Constant { n, c: 1.0 },
        FieldSpec::Bubble(bubble.clone()),
        FieldSpec::Gaussian { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; n] },
        FieldSpec::BubbleWithLump { bubble, amplitude: 0.05, width: 0.5, center: vec![0.0; n] },
        FieldSpec::Paraboloid { n },
    ]
}

/// Range of the linear distortion `|J_ψ|^{1/n}` accepted at a sample point.
/// Outside it `u_ψ` is far from unit size and the factor `u^{−(n+2)/(n−2)}`
/// in `A^u` magnifies difference errors without bound.
/// Minimum distance from a sample point to a pole of the word.
pub const POLE_CLEARANCE: f64 = 1.0;

pub const DISTORTION_RANGE: (f64, f64) = (0.5, 2.0);

/// Points `x ∈ B_2` with `ψ(x) ∈ B_2`, at distance [`POLE_CLEARANCE`] from every
/// pole of `psi` and with distortion in [`DISTORTION_RANGE`], so both sides
/// of the comparison stay where the catalog fields are of unit size; `None`
/// when rejection sampling finds too few.
pub fn sample_away_from_poles(psi: &MoebiusMap, count: usize, rng: &mut Sampler) -> Option<Vec<Vec<f64>>> {
    let poles = psi.poles();
    let n = psi.n() as f64;
    let mut pts = Vec::with_capacity(count);
    for _ in 0..1000 * count.max(1) {
        if pts.len() == count {
            break;
        }
        let x = rng.ball(psi.n(), 2.0);
        let clear = poles
            .iter()
            .all(|p| p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() >= POLE_CLEARANCE * POLE_CLEARANCE);
        if !clear {
            continue;
        }
        let Ok(image) = psi.apply(&x) else { continue };
        if image.iter().map(|v| v * v).sum::<f64>() >= 4.0 {
            continue;
        }
        let Ok(det) = psi.jacobian_det(&x) else { continue };
        let d = det.abs().powf(1.0 / n);
        if d >= DISTORTION_RANGE.0 && d <= DISTORTION_RANGE.1 {
            pts.push(x);
        }
    }
    (pts.len() == count).then_some(pts)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugationReport {
    pub n: usize,
    pub words: usize,
    pub fields: usize,
    pub points_per_pair: usize,
    pub analytic_max: f64,
    pub fd_steps: Vec<f64>,
    pub fd_max: Vec<f64>,
    /// Least-squares slope of `log(fd_max)` against `log(h)`.
    pub fd_order: f64,
}

/// Conjugation residuals over `words × catalog` in analytic mode and with
/// second-order differences at each step in `fd_steps`.
pub fn conjugation_suite(n: usize, words: usize, points: usize, fd_steps: &[f64], seed: u64) -> Result<ConjugationReport> {
    let mut rng = Sampler::new(seed);
    let fields = catalog_fields(n)
        .iter()
        .map(|f| f.build())
        .collect::<Result<Vec<_>>>()?;
    let mut analytic_max = 0.0f64;
    let mut fd_max = vec![0.0f64; fd_steps.len()];
    for _ in 0..words {
        // words that contract or stretch all of B_2 too much are redrawn
        let (psi, pts) = loop {
            let psi = random_moebius(n, &mut rng);
            if let Some(pts) = sample_away_from_poles(&psi, points, &mut rng) {
                break (psi, pts);
            }
        };
        for u in &fields {
            analytic_max = analytic_max.max(conjugation_residual(u.clone(), &psi, &pts, DerivativeMode::Analytic)?);
            for (k, h) in fd_steps.iter().enumerate() {
                let mode = DerivativeMode::FiniteDifference { h: *h, order: 2 };
                fd_max[k] = fd_max[k].max(conjugation_residual(u.clone(), &psi, &pts, mode)?);
            }
        }
    }
    Ok(ConjugationReport {
        n,
        words,
        fields: fields.len(),
        points_per_pair: points,
        analytic_max,
        fd_order: log_slope(fd_steps, &fd_max),
        fd_steps: fd_steps.to_vec(),
        fd_max,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
