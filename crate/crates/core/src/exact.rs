//! Closed-form bubble solutions on ℝⁿ, the half-space and the unit ball,
//! with residual checks for the equation, the boundary conditions and the
//! algebraic parameter constraints.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conformal::{a_matrix_flat, DerivativeMode, Domain, Jet, ScalarField};
use crate::error::{Error, Result};
use crate::operators::{CurvatureOperator, EigenVec};
use crate::sampling::Sampler;

/// `u(x) = (a/(1+beta·|x−x̄|²))^{(n−2)/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub n: usize,
    pub a: f64,
    pub beta: f64,
    pub center: Vec<f64>,
}

/// Residuals of a closed-form check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub r1: f64,
    pub r2: f64,
    pub samples_used: usize,
}

/// `beta = b²` for the `1 + b²|x−x̄|²` form.
pub fn beta_from_b_squared(b: f64) -> f64 {
    b * b
}

/// Inverse of [`beta_from_b_squared`] on `beta ≥ 0`.
pub fn b_squared_from_beta(beta: f64) -> Result<f64> {
    if beta < 0.0 {
        return Err(Error::Domain(format!("beta = {beta} has no real square root")));
    }
    Ok(beta.sqrt())
}

impl BubbleParams {
    pub fn new(n: usize, a: f64, beta: f64, center: Vec<f64>) -> Result<Self> {
        let p = BubbleParams { n, a, beta, center };
        p.check_basic()?;
        Ok(p)
    }

    pub fn centered(n: usize, a: f64, beta: f64) -> Result<Self> {
        Self::new(n, a, beta, vec![0.0; n])
    }

    fn check_basic(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Domain(format!("n must be at least 3, got {}", self.n)));
        }
        if self.center.len() != self.n {
            return Err(Error::Domain(format!(
                "center has {} coordinates, expected {}",
                self.center.len(),
                self.n
            )));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Domain(format!("a must be positive, got {}", self.a)));
        }
        if !self.beta.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("bubble parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn is_fullspace(&self) -> bool {
        self.beta > 0.0
    }

    pub fn is_ball_admissible(&self) -> bool {
        self.beta >= -1.0
    }

    pub fn is_halfspace_admissible(&self) -> bool {
        let xn = self.center[self.n - 1];
        self.beta + xn.min(0.0).powi(2) > 0.0
    }

    fn exponent(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    fn denominator(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.n {
            return Err(Error::Domain(format!("point has {} coordinates, expected {}", x.len(), self.n)));
        }
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let d = 1.0 + self.beta * y.iter().map(|v| v * v).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Domain(format!("bubble denominator {d} is not positive at {x:?}")));
        }
        Ok((d, y))
    }

    /// The constant eigenvalue `2·beta·a⁻²` of `A^u`.
    pub fn curvature_level(&self) -> f64 {
        2.0 * self.beta / (self.a * self.a)
    }
}

pub fn bubble_value(p: &BubbleParams, x: &[f64]) -> Result<f64> {
    let (d, _) = p.denominator(x)?;
    Ok((p.a / d).powf(p.exponent()))
}

fn bubble_jet(p: &BubbleParams, x: &[f64]) -> Result<Jet> {
    let (d, y) = p.denominator(x)?;
    let s = p.exponent();
    let n = p.n;
    let value = (p.a / d).powf(s);
    let g = -2.0 * s * p.beta * value / d;
    let gradient = DVector::from_iterator(n, y.iter().map(|v| g * v));
    let w = 2.0 * p.beta * (s + 1.0) / d;
    let mut hessian = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            hessian[(i, j)] = g * (id - w * y[i] * y[j]);
        }
    }
    Ok(Jet { value, gradient, hessian })
}

/// A bubble as a scalar field with exact derivatives.
#[derive(Clone, Debug)]
pub struct BubbleField {
    params: BubbleParams,
}

impl BubbleField {
    pub fn new(params: BubbleParams) -> Result<Self> {
        params.check_basic()?;
        Ok(BubbleField { params })
    }

    pub fn params(&self) -> &BubbleParams {
        &self.params
    }
}

impl ScalarField for BubbleField {
    fn dim(&self) -> usize {
        self.params.n
    }
    fn domain(&self) -> Domain {
        if self.params.beta < 0.0 && self.params.center.iter().all(|c| *c == 0.0) {
            Domain::Ball { radius: (-self.params.beta).powf(-0.5) }
        } else {
            Domain::Whole
        }
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        bubble_value(&self.params, x)
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        bubble_jet(&self.params, x)
    }
}

const DEFAULT_SAMPLES: usize = 64;
const SAMPLE_SEED: u64 = 0x6275_6262_6c65;

/// Points spread over a few scales around the bubble center.
fn interior_samples(p: &BubbleParams, count: usize) -> Vec<Vec<f64>> {
    let mut rng = Sampler::new(SAMPLE_SEED);
    let mut pts = vec![p.center.clone()];
    while pts.len() < count {
        let dir = rng.sphere(p.n);
        let r = rng.log_uniform(1e-3, 1e2);
        pts.push(dir.iter().zip(&p.center).map(|(d, c)| c + r * d).collect());
    }
    pts
}

/// `r1 = max ‖A^u − 2·beta·a⁻²·I‖∞` over samples, `r2 = |f(2·beta·a⁻²·e) − 1|`.
pub fn verify_fullspace(op: &CurvatureOperator, p: &BubbleParams) -> Result<Residuals> {
    verify_fullspace_at(op, p, &interior_samples(p, DEFAULT_SAMPLES))
}

pub fn verify_fullspace_at(op: &CurvatureOperator, p: &BubbleParams, points: &[Vec<f64>]) -> Result<Residuals> {
    if !p.is_fullspace() {
        return Err(Error::Domain(format!("full-space bubble needs beta > 0, got {}", p.beta)));
    }
    if op.n() != p.n {
        return Err(Error::Domain(format!("operator dimension {} differs from bubble dimension {}", op.n(), p.n)));
    }
    let field = BubbleField::new(p.clone())?;
    let level = p.curvature_level();
    let mut r1 = 0.0f64;
    for x in points {
        let a = a_matrix_flat(&field, x, DerivativeMode::Analytic)?;
        r1 = r1.max(a.distance_to_multiple_of_identity(level));
    }
    let lam = EigenVec::constant(p.n, level)?;
    let r2 = (op.value(&lam)? - 1.0).abs();
    Ok(Residuals { r1, r2, samples_used: points.len() })
}

fn boundary_halfspace_samples(p: &BubbleParams, count: usize) -> Vec<Vec<f64>> {
    let mut rng = Sampler::new(SAMPLE_SEED ^ 1);
    let n = p.n;
    (0..count)
        .map(|i| {
            let mut x = vec![0.0; n];
            if i > 0 {
                let dir = rng.sphere(n - 1);
                let r = rng.log_uniform(1e-3, 1e2);
                for j in 0..n - 1 {
                    x[j] = p.center[j] + r * dir[j];
                }
            } else {
                x[..n - 1].copy_from_slice(&p.center[..n - 1]);
            }
            x
        })
        .collect()
}

/// Boundary condition `∂ₙu = c·u^{n/(n−2)}` on `{xₙ = 0}` and the constraint
/// `(n−2)a⁻¹·beta·x̄ₙ = c`.
pub fn halfspace_residual(p: &BubbleParams, c: f64) -> Result<Residuals> {
    p.check_basic()?;
    if !p.is_halfspace_admissible() {
        return Err(Error::Domain("half-space bubble needs beta + min(x̄ₙ, 0)² > 0".into()));
    }
    let n = p.n;
    let nf = n as f64;
    let pts = boundary_halfspace_samples(p, DEFAULT_SAMPLES);
    let mut r1 = 0.0f64;
    for x in &pts {
        let jet = bubble_jet(p, x)?;
        let res = jet.gradient[n - 1] - c * jet.value.powf(nf / (nf - 2.0));
        r1 = r1.max(res.abs());
    }
    let r2 = ((nf - 2.0) / p.a * p.beta * p.center[n - 1] - c).abs();
    Ok(Residuals { r1, r2, samples_used: pts.len() })
}

/// Robin condition `∂_νu + ((n−2)/2)u + c·u^{n/(n−2)} = 0` on `∂B₁` and the
/// constraint `((n−2)/2)(1−beta) + c·a = 0`.
pub fn ball_robin_residual(p: &BubbleParams, c: f64) -> Result<Residuals> {
    p.check_basic()?;
    if p.center.iter().any(|v| *v != 0.0) {
        return Err(Error::Domain("ball bubble must be centered at the origin".into()));
    }
    if !p.is_ball_admissible() {
        return Err(Error::Domain(format!("ball bubble needs beta >= -1, got {}", p.beta)));
    }
    let nf = p.n as f64;
    let mut rng = Sampler::new(SAMPLE_SEED ^ 2);
    let pts: Vec<Vec<f64>> = (0..DEFAULT_SAMPLES).map(|_| rng.sphere(p.n)).collect();
    let mut r1 = 0.0f64;
    for x in &pts {
        let jet = bubble_jet(p, x)?;
        let normal: f64 = jet.gradient.iter().zip(x).map(|(g, v)| g * v).sum();
        let res = normal + (nf - 2.0) / 2.0 * jet.value + c * jet.value.powf(nf / (nf - 2.0));
        r1 = r1.max(res.abs());
    }
    let r2 = ((nf - 2.0) / 2.0 * (1.0 - p.beta) + c * p.a).abs();
    Ok(Residuals { r1, r2, samples_used: pts.len() })
}

/// The Robin constant forced by the ball constraint.
pub fn ball_robin_constant(p: &BubbleParams) -> f64 {
    -(p.n as f64 - 2.0) * (1.0 - p.beta) / (2.0 * p.a)
}

/// The centered bubble with `w(0) = v0`, `w′(0) = 0`, `w″(0) = vpp0`.
pub fn bubble_from_initial_conditions(v0: f64, vpp0: f64, n: usize) -> Result<BubbleParams> {
    if !(v0 > 0.0) {
        return Err(Error::Domain(format!("v0 must be positive, got {v0}")));
    }
    let m = n as f64 - 2.0;
    let a = v0.powf(2.0 / m);
    let beta = a.powf(-m / 2.0) * vpp0 / (-m);
    BubbleParams::centered(n, a, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{pullback_u, MoebiusMap, Generator};
    use crate::operators::make_sigma_k_operator;
    use std::sync::Arc;

    #[test]
    fn values() {
        let p = BubbleParams::centered(3, 1.0, 1.0).unwrap();
        assert_eq!(bubble_value(&p, &[0.0; 3]).unwrap(), 1.0);
        assert!((bubble_value(&p, &[1.0, 0.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-16);
        let q = BubbleParams::centered(5, 2.0, 0.0).unwrap();
        assert_eq!(bubble_value(&q, &[3.0, 1.0, 0.0, 0.0, 7.0]).unwrap(), 2f64.powf(1.5));
        let bad = BubbleParams::centered(3, 1.0, -1.0).unwrap();
        assert!(matches!(bubble_value(&bad, &[1.0, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn fullspace_normalized() {
        let op = make_sigma_k_operator(3, 1).unwrap();
        let r = verify_fullspace(&op, &BubbleParams::centered(3, 1.0, 1.0 / 6.0).unwrap()).unwrap();
        assert!(r.r1 <= 1e-10 && r.r2 <= 1e-12, "{r:?}");
        let op = make_sigma_k_operator(5, 2).unwrap();
        let beta = 1.0 / (2.0 * 10f64.sqrt());
        let r = verify_fullspace(&op, &BubbleParams::centered(5, 1.0, beta).unwrap()).unwrap();
        assert!(r.r2 <= 1e-12, "{r:?}");
        assert!(r.r1 <= 1e-10, "{r:?}");
    }

    #[test]
    fn fullspace_unnormalized_still_constant() {
        let op = make_sigma_k_operator(4, 3).unwrap();
        let p = BubbleParams::new(4, 0.7, 2.3, vec![0.5, -1.0, 2.0, 0.1]).unwrap();
        let r = verify_fullspace(&op, &p).unwrap();
        assert!(r.r1 <= 1e-10 && r.r2 > 1e-3);
    }

    #[test]
    fn halfspace_examples() {
        let p = BubbleParams::centered(3, 1.0, 1.0).unwrap();
        let r = halfspace_residual(&p, 0.0).unwrap();
        assert_eq!((r.r1, r.r2), (0.0, 0.0));
        let p = BubbleParams::new(3, 1.0, 1.0, vec![0.0, 0.0, 1.0]).unwrap();
        let r = halfspace_residual(&p, 1.0).unwrap();
        assert!(r.r1 <= 1e-10 && r.r2 == 0.0);
        let r = halfspace_residual(&p, 2.0).unwrap();
        assert_eq!(r.r2, 1.0);
    }

    #[test]
    fn ball_examples() {
        let p = BubbleParams::centered(5, 1.3, 1.0).unwrap();
        let r = ball_robin_residual(&p, 0.0).unwrap();
        assert!(r.r1 <= 1e-10 && r.r2 == 0.0);
        let p = BubbleParams::centered(3, 1.0, 0.0).unwrap();
        assert_eq!(ball_robin_constant(&p), -0.5);
        assert!(ball_robin_residual(&p, -0.5).unwrap().r1 <= 1e-12);
        // n = 4, a = 2, beta = 3: (1)(1 − 3) + 2c = 0 gives c = 1.
        let p = BubbleParams::centered(4, 2.0, 3.0).unwrap();
        let c = ball_robin_constant(&p);
        assert_eq!(c, 1.0);
        let r = ball_robin_residual(&p, c).unwrap();
        assert!(r.r2 == 0.0 && r.r1 <= 1e-12);
        let p = BubbleParams::centered(3, 2.0, -0.5).unwrap();
        assert!(ball_robin_residual(&p, ball_robin_constant(&p)).unwrap().r1 <= 1e-12);
    }

    #[test]
    fn from_initial_conditions() {
        let p = bubble_from_initial_conditions(1.0, 0.0, 4).unwrap();
        assert_eq!((p.a, p.beta), (1.0, 0.0));
        let p = bubble_from_initial_conditions(1.0, -1.0, 3).unwrap();
        assert_eq!((p.a, p.beta), (1.0, 1.0));
        for (v0, vpp, n) in [(0.3, -2.0, 3), (2.5, 0.7, 5), (1.1, -0.01, 7)] {
            let p = bubble_from_initial_conditions(v0, vpp, n).unwrap();
            let jet = bubble_jet(&p, &vec![0.0; n]).unwrap();
            assert!((jet.value - v0).abs() <= 1e-12 * v0);
            assert!((jet.hessian[(0, 0)] - vpp).abs() <= 1e-12);
            assert!(jet.gradient.norm() == 0.0);
        }
    }

    #[test]
    fn scaling_stays_in_family() {
        let p = BubbleParams::centered(4, 1.5, 0.8).unwrap();
        let c = 2.5;
        let u: Arc<dyn ScalarField> = Arc::new(BubbleField::new(p.clone()).unwrap());
        let map = MoebiusMap::new(4, vec![Generator::Scale(c)]).unwrap();
        let pulled = pullback_u(u, &map).unwrap();
        let fit = BubbleParams::centered(4, p.a * c, p.beta * c * c).unwrap();
        for x in interior_samples(&p, 32) {
            let a = pulled.value(&x).unwrap();
            let b = bubble_value(&fit, &x).unwrap();
            assert!((a - b).abs() <= 1e-8 * b.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn small_beta_is_nearly_constant() {
        let p = BubbleParams::centered(3, 1.0, 1e-8).unwrap();
        for x in interior_samples(&p, 16).iter().filter(|x| x.iter().map(|v| v * v).sum::<f64>() < 1.0) {
            assert!((bubble_value(&p, x).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn b_helpers() {
        assert_eq!(beta_from_b_squared(3.0), 9.0);
        assert_eq!(b_squared_from_beta(9.0).unwrap(), 3.0);
        assert!(b_squared_from_beta(-1.0).is_err());
    }

    #[test]
    fn params_json() {
        let p = BubbleParams::centered(3, 1.0, 0.5).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":3,"a":1.0,"beta":0.5,"center":[0.0,0.0,0.0]}"#);
    }
}
