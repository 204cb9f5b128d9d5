use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{BubbleField, BubbleParams};

use super::moebius::{norm2, MoebiusMap};

/// Value, gradient and Hessian of a field at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Jet {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            value,
            gradient: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    /// Jet of `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Jet, b: f64) -> Jet {
        Jet {
            value: a * self.value + b * other.value,
            gradient: &self.gradient * a + &other.gradient * b,
            hessian: &self.hessian * a + &other.hessian * b,
        }
    }
}

/// Where a field is defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Whole,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// `{|x| < R, x_n > 0}`.
    HalfBall { radius: f64 },
    /// Periodic interval `[0, L)`, one-dimensional.
    Circle { length: f64 },
}

impl Domain {
    /// Distance from `x` to the boundary; negative outside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        let r = norm2(x).sqrt();
        match *self {
            Domain::Whole | Domain::Circle { .. } => f64::INFINITY,
            Domain::Ball { radius } => radius - r,
            Domain::Annulus { inner, outer } => (r - inner).min(outer - r),
            Domain::HalfBall { radius } => (radius - r).min(*x.last().unwrap_or(&0.0)),
        }
    }
}

/// Positive function on a domain, with analytic derivatives up to order two.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain {
        Domain::Whole
    }

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Closed-form jet. Fields without one return [`Error::Unsupported`].
    fn jet(&self, x: &[f64]) -> Result<Jet>;

    /// Isolated singularities that finite-difference stencils must avoid.
    fn singular_points(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// How derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    /// Central differences of order 2 or 4 with step `h`.
    FiniteDifference { h: f64, order: u8 },
}

impl DerivativeMode {
    pub fn fd(h: f64) -> Self {
        DerivativeMode::FiniteDifference { h, order: 2 }
    }
}

/// Jet of `u` at `x` in the requested mode, enforcing positivity and the
/// stencil guard band around the boundary and singular points.
pub fn jet_at(u: &dyn ScalarField, x: &[f64], mode: DerivativeMode) -> Result<Jet> {
    if x.len() != u.dim() {
        return Err(Error::Domain(format!(
            "point has dimension {}, field has {}",
            x.len(),
            u.dim()
        )));
    }
    let jet = match mode {
        DerivativeMode::Analytic => {
            if u.domain().distance_to_boundary(x) <= 0.0 {
                return Err(Error::Geometry(format!("{x:?} is not interior to {:?}", u.domain())));
            }
            u.jet(x)?
        }
        DerivativeMode::FiniteDifference { h, order } => fd_jet(u, x, h, order)?,
    };
    if !(jet.value > 0.0) {
        return Err(Error::Positivity {
            point: x.to_vec(),
            value: jet.value,
        });
    }
    Ok(jet)
}

fn fd_jet(u: &dyn ScalarField, x: &[f64], h: f64, order: u8) -> Result<Jet> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let guard = match order {
        2 => 2.0 * h,
        4 => 4.0 * h,
        _ => return Err(Error::Domain(format!("unsupported stencil order {order}"))),
    };
    if u.domain().distance_to_boundary(x) < guard {
        return Err(Error::Geometry(format!(
            "stencil of reach {guard:e} at {x:?} leaves {:?}",
            u.domain()
        )));
    }
    for p in u.singular_points() {
        let d = x.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if d < guard {
            return Err(Error::Singularity { point: x.to_vec() });
        }
    }
    let n = x.len();
    let at = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.to_vec();
        for &(i, s) in offsets {
            y[i] += s * h;
        }
        u.value(&y)
    };
    // one-dimensional first-derivative weights on offsets -2..=2
    let (w1, w2): ([f64; 5], [f64; 5]) = if order == 2 {
        ([0.0, -0.5, 0.0, 0.5, 0.0], [0.0, 1.0, -2.0, 1.0, 0.0])
    } else {
        (
            [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
            [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        )
    };
    let offs = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let value = u.value(x)?;
    let mut gradient = DVector::zeros(n);
    let mut hessian = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut g = 0.0;
        let mut d2 = 0.0;
        for (a, &oa) in offs.iter().enumerate() {
            if w1[a] == 0.0 && w2[a] == 0.0 {
                continue;
            }
            let v = if oa == 0.0 { value } else { at(&[(i, oa)])? };
            g += w1[a] * v;
            d2 += w2[a] * v;
        }
        gradient[i] = g / h;
        hessian[(i, i)] = d2 / (h * h);
        for j in 0..i {
            let mut m = 0.0;
            for (a, &oa) in offs.iter().enumerate() {
                if w1[a] == 0.0 {
                    continue;
                }
                for (b, &ob) in offs.iter().enumerate() {
                    if w1[b] == 0.0 {
                        continue;
                    }
                    m += w1[a] * w1[b] * at(&[(i, oa), (j, ob)])?;
                }
            }
            hessian[(i, j)] = m / (h * h);
            hessian[(j, i)] = m / (h * h);
        }
    }
    Ok(Jet {
        value,
        gradient,
        hessian,
    })
}

/// `u ≡ c`.
#[derive(Clone, Debug)]
pub struct ConstantField {
    pub n: usize,
    pub c: f64,
}

impl ScalarField for ConstantField {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.c)
    }
    fn jet(&self, _x: &[f64]) -> Result<Jet> {
        Ok(Jet::constant(self.n, self.c))
    }
}

/// `u(x) = base + amplitude·exp(−|x−center|²/width²)`.
#[derive(Clone, Debug)]
pub struct GaussianField {
    pub base: f64,
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
}

impl ScalarField for GaussianField {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(self.base + self.amplitude * (-d2 / (self.width * self.width)).exp())
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.dim();
        let w2 = self.width * self.width;
        let d = DVector::from_iterator(n, x.iter().zip(&self.center).map(|(a, b)| a - b));
        let g = self.amplitude * (-d.norm_squared() / w2).exp();
        Ok(Jet {
            value: self.base + g,
            gradient: &d * (-2.0 * g / w2),
            hessian: (&d * d.transpose() * (4.0 / (w2 * w2)) - DMatrix::identity(n, n) * (2.0 / w2)) * g,
        })
    }
}

/// `u(x) = 1 + |x|²`.
#[derive(Clone, Debug)]
pub struct ParaboloidField {
    pub n: usize,
}

impl ScalarField for ParaboloidField {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 + norm2(x))
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        Ok(Jet {
            value: 1.0 + norm2(x),
            gradient: DVector::from_column_slice(x) * 2.0,
            hessian: DMatrix::identity(self.n, self.n) * 2.0,
        })
    }
}

/// `u(x) = scale·|x − center|^{2−n}`, the fundamental solution.
#[derive(Clone, Debug)]
pub struct InversePowerField {
    pub scale: f64,
    pub center: Vec<f64>,
}

impl ScalarField for InversePowerField {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        if d2 == 0.0 {
            return Err(Error::Singularity { point: x.to_vec() });
        }
        Ok(self.scale * d2.powf((2.0 - self.dim() as f64) / 2.0))
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.dim();
        let nf = n as f64;
        let d = DVector::from_iterator(n, x.iter().zip(&self.center).map(|(a, b)| a - b));
        let r2 = d.norm_squared();
        if r2 == 0.0 {
            return Err(Error::Singularity { point: x.to_vec() });
        }
        let s = self.scale;
        Ok(Jet {
            value: s * r2.powf((2.0 - nf) / 2.0),
            gradient: &d * (s * (2.0 - nf) * r2.powf(-nf / 2.0)),
            hessian: (DMatrix::identity(n, n) * r2.powf(-nf / 2.0)
                - &d * d.transpose() * (nf * r2.powf(-nf / 2.0 - 1.0)))
                * (s * (2.0 - nf)),
        })
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        vec![self.center.clone()]
    }
}

/// Pointwise sum of two fields.
#[derive(Clone)]
pub struct SumField {
    pub first: Arc<dyn ScalarField>,
    pub second: Arc<dyn ScalarField>,
}

impl ScalarField for SumField {
    fn dim(&self) -> usize {
        self.first.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.first.value(x)? + self.second.value(x)?)
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        Ok(self.first.jet(x)?.combine(1.0, &self.second.jet(x)?, 1.0))
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        let mut p = self.first.singular_points();
        p.extend(self.second.singular_points());
        p
    }
}

/// One-dimensional periodic profile `c·(1 + ε·sin(2πm t/L))` on `S¹(L)`.
#[derive(Clone, Debug)]
pub struct CircleModeField {
    pub length: f64,
    pub c: f64,
    pub epsilon: f64,
    pub mode: u32,
}

impl CircleModeField {
    fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.mode as f64 / self.length
    }
}

impl ScalarField for CircleModeField {
    fn dim(&self) -> usize {
        1
    }
    fn domain(&self) -> Domain {
        Domain::Circle { length: self.length }
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.c * (1.0 + self.epsilon * (self.omega() * x[0]).sin()))
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let w = self.omega();
        let (s, c) = (w * x[0]).sin_cos();
        Ok(Jet {
            value: self.c * (1.0 + self.epsilon * s),
            gradient: DVector::from_element(1, self.c * self.epsilon * w * c),
            hessian: DMatrix::from_element(1, 1, -self.c * self.epsilon * w * w * s),
        })
    }
}

/// `u_ψ = |J_ψ|^{(n−2)/(2n)}(u∘ψ)`.
#[derive(Clone)]
pub struct PullbackField {
    inner: Arc<dyn ScalarField>,
    map: MoebiusMap,
}

impl ScalarField for PullbackField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let y = self.map.apply(x)?;
        Ok(self.map.conformal_weight(x)? * self.inner.value(&y)?)
    }
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        self.map.pull_jet(x, |y| self.inner.jet(y))
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        let mut p = self.map.poles();
        let inv = self.map.inverse();
        p.extend(self.inner.singular_points().iter().filter_map(|s| inv.apply(s).ok()));
        p
    }
}

/// Pull a field back by a Möbius map.
pub fn pullback_u(u: Arc<dyn ScalarField>, map: &MoebiusMap) -> Result<Arc<dyn ScalarField>> {
    if map.n() != u.dim() {
        return Err(Error::Domain(format!(
            "map dimension {} does not match field dimension {}",
            map.n(),
            u.dim()
        )));
    }
    Ok(Arc::new(PullbackField {
        inner: u,
        map: map.clone(),
    }))
}

/// `u_{x,λ}(y) = (λ/|y−x|)^{n−2} u(x + λ²(y−x)/|y−x|²)`, evaluated directly;
/// derivatives come from the equivalent Möbius word.
#[derive(Clone)]
pub struct SphereInversionField {
    inner: Arc<dyn ScalarField>,
    center: Vec<f64>,
    radius: f64,
    word: MoebiusMap,
}

impl SphereInversionField {
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ScalarField for SphereInversionField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, y: &[f64]) -> Result<f64> {
        let n = y.len() as f64;
        let d: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let r2 = norm2(&d);
        if r2 == 0.0 {
            return Err(Error::Singularity { point: y.to_vec() });
        }
        let l2 = self.radius * self.radius;
        let image: Vec<f64> = self.center.iter().zip(&d).map(|(c, di)| c + l2 * di / r2).collect();
        Ok((l2 / r2).powf((n - 2.0) / 2.0) * self.inner.value(&image)?)
    }
    fn jet(&self, y: &[f64]) -> Result<Jet> {
        if y == self.center.as_slice() {
            return Err(Error::Singularity { point: y.to_vec() });
        }
        self.word.pull_jet(y, |z| self.inner.jet(z))
    }
    fn singular_points(&self) -> Vec<Vec<f64>> {
        vec![self.center.clone()]
    }
}

pub fn sphere_inversion_u(u: Arc<dyn ScalarField>, center: &[f64], radius: f64) -> Result<SphereInversionField> {
    let word = MoebiusMap::sphere_inversion(center, radius)?;
    Ok(SphereInversionField {
        inner: u,
        center: center.to_vec(),
        radius,
        word,
    })
}

/// Catalog of constructible fields, `{"kind": ..., "params": {...}}` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant { n: usize, c: f64 },
    Bubble(BubbleParams),
    Gaussian { base: f64, amplitude: f64, width: f64, center: Vec<f64> },
    Paraboloid { n: usize },
    InversePower { scale: f64, center: Vec<f64> },
    BubbleWithLump { bubble: BubbleParams, amplitude: f64, width: f64, center: Vec<f64> },
    CircleMode { length: f64, c: f64, epsilon: f64, mode: u32 },
}

impl FieldSpec {
    pub fn build(&self) -> Result<Arc<dyn ScalarField>> {
        Ok(match self {
            FieldSpec::Constant { n, c } => Arc::new(ConstantField { n: *n, c: *c }),
            FieldSpec::Bubble(p) => Arc::new(BubbleField::new(p.clone())?),
            FieldSpec::Gaussian { base, amplitude, width, center } => Arc::new(GaussianField {
                base: *base,
                amplitude: *amplitude,
                width: *width,
                center: center.clone(),
            }),
            FieldSpec::Paraboloid { n } => Arc::new(ParaboloidField { n: *n }),
            FieldSpec::InversePower { scale, center } => Arc::new(InversePowerField {
                scale: *scale,
                center: center.clone(),
            }),
            FieldSpec::BubbleWithLump { bubble, amplitude, width, center } => {
                let b = BubbleField::new(bubble.clone())?;
                let lump = GaussianField {
                    base: 0.0,
                    amplitude: *amplitude,
                    width: *width,
                    center: center.clone(),
                };
                Arc::new(SumField {
                    first: Arc::new(b),
                    second: Arc::new(lump),
                })
            }
            FieldSpec::CircleMode { length, c, epsilon, mode } => Arc::new(CircleModeField {
                length: *length,
                c: *c,
                epsilon: *epsilon,
                mode: *mode,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::moebius::Generator;

    fn assert_jets_close(a: &Jet, b: &Jet, tol: f64) {
        assert!((a.value - b.value).abs() < tol, "{} vs {}", a.value, b.value);
        assert!((&a.gradient - &b.gradient).amax() < tol, "{} vs {}", a.gradient, b.gradient);
        assert!((&a.hessian - &b.hessian).amax() < tol, "{} vs {}", a.hessian, b.hessian);
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let fields: Vec<Arc<dyn ScalarField>> = vec![
            Arc::new(GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.1, 0.0, -0.2] }),
            Arc::new(ParaboloidField { n: 4 }),
            Arc::new(InversePowerField { scale: 2.0, center: vec![0.0, 1.0, 0.0] }),
        ];
        for f in fields {
            let x: Vec<f64> = (0..f.dim()).map(|i| 0.3 + 0.2 * i as f64).collect();
            let a = jet_at(f.as_ref(), &x, DerivativeMode::Analytic).unwrap();
            let b = jet_at(f.as_ref(), &x, DerivativeMode::FiniteDifference { h: 1e-3, order: 4 }).unwrap();
            assert_jets_close(&a, &b, 1e-8);
        }
    }

    #[test]
    fn pullback_of_one_under_inversion() {
        let one: Arc<dyn ScalarField> = Arc::new(ConstantField { n: 3, c: 1.0 });
        let inv = MoebiusMap::new(3, vec![Generator::Invert]).unwrap();
        let u = pullback_u(one, &inv).unwrap();
        let x = [0.5, -0.3, 0.8];
        let r = norm2(&x).sqrt();
        assert!((u.value(&x).unwrap() - 1.0 / r).abs() < 1e-15);
        let a = u.jet(&x).unwrap();
        let b = InversePowerField { scale: 1.0, center: vec![0.0; 3] }.jet(&x).unwrap();
        assert_jets_close(&a, &b, 1e-13);
    }

    #[test]
    fn pullback_scale_rule() {
        let g: Arc<dyn ScalarField> =
            Arc::new(GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; 4] });
        let c = 1.7;
        let m = MoebiusMap::new(4, vec![Generator::Scale(c)]).unwrap();
        let u = pullback_u(g.clone(), &m).unwrap();
        let x = [0.2, 0.1, -0.3, 0.4];
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let expected = c.powf(1.0) * g.value(&cx).unwrap();
        assert!((u.value(&x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn pullback_identity_is_noop() {
        let g: Arc<dyn ScalarField> =
            Arc::new(GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; 3] });
        let u = pullback_u(g.clone(), &MoebiusMap::identity(3)).unwrap();
        let x = [0.3, 0.4, 0.5];
        assert_eq!(u.value(&x).unwrap(), g.value(&x).unwrap());
    }

    #[test]
    fn pullback_jet_matches_fd_through_inversion() {
        let g: Arc<dyn ScalarField> =
            Arc::new(GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; 3] });
        let m = MoebiusMap::new(
            3,
            vec![Generator::Translate(vec![0.2, 0.0, 0.1]), Generator::Invert, Generator::Scale(0.8)],
        )
        .unwrap();
        let u = pullback_u(g, &m).unwrap();
        let x = [0.4, 0.5, -0.3];
        let a = jet_at(u.as_ref(), &x, DerivativeMode::Analytic).unwrap();
        let b = jet_at(u.as_ref(), &x, DerivativeMode::FiniteDifference { h: 1e-3, order: 4 }).unwrap();
        assert_jets_close(&a, &b, 1e-7);
    }

    #[test]
    fn contravariance() {
        let g: Arc<dyn ScalarField> =
            Arc::new(GaussianField { base: 1.0, amplitude: 0.4, width: 0.8, center: vec![0.1, 0.2, 0.0] });
        let psi = MoebiusMap::new(3, vec![Generator::Invert, Generator::Translate(vec![0.5, 0.0, 0.0])]).unwrap();
        let phi = MoebiusMap::new(3, vec![Generator::Scale(2.0), Generator::Invert]).unwrap();
        // (u_ψ)_φ = u_{ψ∘φ}; ψ∘φ applies φ first
        let lhs = pullback_u(pullback_u(g.clone(), &psi).unwrap(), &phi).unwrap();
        let rhs = pullback_u(g, &phi.then(&psi)).unwrap();
        for x in [[0.3, 0.4, 0.5], [1.0, -0.7, 0.2]] {
            let (a, b) = (lhs.value(&x).unwrap(), rhs.value(&x).unwrap());
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn sphere_inversion_examples() {
        let one: Arc<dyn ScalarField> = Arc::new(ConstantField { n: 3, c: 1.0 });
        let u = sphere_inversion_u(one, &[0.0; 3], 1.0).unwrap();
        let y = [0.3, 1.2, -0.4];
        assert!((u.value(&y).unwrap() - 1.0 / norm2(&y).sqrt()).abs() < 1e-15);
        assert!(matches!(u.value(&[0.0; 3]), Err(Error::Singularity { .. })));

        let g: Arc<dyn ScalarField> =
            Arc::new(GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.2, 0.0, 0.0] });
        let x0 = [0.1, -0.2, 0.3];
        let s = sphere_inversion_u(g.clone(), &x0, 0.6).unwrap();
        let on_sphere = [0.1 + 0.6, -0.2, 0.3];
        assert!((s.value(&on_sphere).unwrap() - g.value(&on_sphere).unwrap()).abs() < 1e-14);
        let word = pullback_u(g, &MoebiusMap::sphere_inversion(&x0, 0.6).unwrap()).unwrap();
        for y in [[1.0, 0.5, 0.2], [-0.4, 0.9, 1.3]] {
            assert!((s.value(&y).unwrap() - word.value(&y).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fd_guard_band() {
        let f = GaussianField { base: 1.0, amplitude: 0.3, width: 1.0, center: vec![0.0; 3] };
        struct InBall(GaussianField);
        impl ScalarField for InBall {
            fn dim(&self) -> usize { 3 }
            fn domain(&self) -> Domain { Domain::Ball { radius: 1.0 } }
            fn value(&self, x: &[f64]) -> Result<f64> { self.0.value(x) }
            fn jet(&self, x: &[f64]) -> Result<Jet> { self.0.jet(x) }
        }
        let b = InBall(f);
        assert!(matches!(
            jet_at(&b, &[0.0, 0.0, 0.9999], DerivativeMode::fd(1e-3)),
            Err(Error::Geometry(_))
        ));
        assert!(jet_at(&b, &[0.0, 0.0, 0.99], DerivativeMode::fd(1e-3)).is_ok());
        let p = InversePowerField { scale: 1.0, center: vec![0.0; 3] };
        assert!(matches!(
            jet_at(&p, &[1e-3, 0.0, 0.0], DerivativeMode::fd(1e-3)),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn field_spec_json() {
        let s = r#"{"kind":"gaussian","params":{"base":1.0,"amplitude":0.3,"width":1.0,"center":[0,0,0]}}"#;
        let spec: FieldSpec = serde_json::from_str(s).unwrap();
        let f = spec.build().unwrap();
        assert!((f.value(&[0.0; 3]).unwrap() - 1.3).abs() < 1e-15);
    }
}
