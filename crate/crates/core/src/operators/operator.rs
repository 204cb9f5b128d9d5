use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots;

use super::cone::{homotopy_point, ConeSpec, LevelSet};
use super::sigma::{elementary_symmetric, sigma_1, sigma_k_gradient};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Tolerance on `|f(φλ) − 1|` for the ray normalization.
pub const RAY_ROOT_TOL: f64 = 1e-12;

#[derive(Clone)]
enum Kind {
    /// `σ_k^{1/k}`.
    SigmaRoot { k: usize },
    /// `σ_k^p`.
    SigmaPower { k: usize, power: f64 },
    Custom { f: ValueFn, grad: GradFn },
    Homogenized(Arc<CurvatureOperator>),
    Homotopy { base: Arc<CurvatureOperator>, t: f64 },
}

/// A symmetric function `f` together with the open cone `Γ` it lives on.
#[derive(Clone)]
pub struct CurvatureOperator {
    n: usize,
    name: String,
    kind: Kind,
    cone: ConeSpec,
    degree: Option<f64>,
}

impl fmt::Debug for CurvatureOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvatureOperator")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("degree", &self.degree)
            .finish()
    }
}

/// `(σ_k^{1/k}, Γ_k)`, homogeneous of degree one.
pub fn make_sigma_k_operator(n: usize, k: usize) -> Result<CurvatureOperator> {
    Ok(CurvatureOperator {
        n,
        name: format!("sigma{k}^(1/{k})"),
        kind: Kind::SigmaRoot { k },
        cone: ConeSpec::gamma_k(n, k)?,
        degree: Some(1.0),
    })
}

/// `(σ_k^p, Γ_k)`, homogeneous of degree `k·p`.
pub fn make_sigma_power_operator(n: usize, k: usize, power: f64) -> Result<CurvatureOperator> {
    if power <= 0.0 {
        return Err(Error::Domain(format!("power must be positive, got {power}")));
    }
    Ok(CurvatureOperator {
        n,
        name: format!("sigma{k}^{power}"),
        kind: Kind::SigmaPower { k, power },
        cone: ConeSpec::gamma_k(n, k)?,
        degree: Some(k as f64 * power),
    })
}

impl CurvatureOperator {
    /// Operator from user-supplied closures.
    pub fn custom(
        name: impl Into<String>,
        cone: ConeSpec,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        degree: Option<f64>,
    ) -> Self {
        Self {
            n: cone.n(),
            name: name.into(),
            kind: Kind::Custom {
                f: Arc::new(f),
                grad: Arc::new(grad),
            },
            cone,
            degree,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn homogeneous_degree(&self) -> Option<f64> {
        self.degree
    }

    /// Replace the homogeneity tag. The tag is a claim, not a computed
    /// property; [`crate::operators::validate_operator`] checks it.
    pub fn with_degree_tag(mut self, degree: Option<f64>) -> Self {
        self.degree = degree;
        self
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        self.cone.contains(lambda)
    }

    fn check(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::Domain(format!(
                "expected {} eigenvalues, got {}",
                self.n,
                lambda.len()
            )));
        }
        if !self.cone.contains(lambda) {
            return Err(Error::NotInCone {
                point: lambda.to_vec(),
            });
        }
        Ok(())
    }

    /// `f(λ)` for `λ ∈ Γ`.
    pub fn value(&self, lambda: &[f64]) -> Result<f64> {
        self.check(lambda)?;
        self.value_in_cone(lambda)
    }

    /// `∇f(λ)` for `λ ∈ Γ`.
    pub fn gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check(lambda)?;
        self.gradient_in_cone(lambda)
    }

    fn value_in_cone(&self, lambda: &[f64]) -> Result<f64> {
        Ok(match &self.kind {
            Kind::SigmaRoot { k } => {
                let s = elementary_symmetric(lambda)[*k];
                s.powf(1.0 / *k as f64)
            }
            Kind::SigmaPower { k, power } => elementary_symmetric(lambda)[*k].powf(*power),
            Kind::Custom { f, .. } => f(lambda),
            Kind::Homogenized(base) => 1.0 / ray_normalizer(base, lambda)?,
            Kind::Homotopy { base, t } => base.value_in_cone(&homotopy_point(lambda, *t))?,
        })
    }

    fn gradient_in_cone(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.kind {
            Kind::SigmaRoot { k } => {
                let kf = *k as f64;
                let s = elementary_symmetric(lambda)[*k];
                let scale = s.powf(1.0 / kf - 1.0) / kf;
                sigma_k_gradient(lambda, *k)?
                    .into_iter()
                    .map(|g| scale * g)
                    .collect()
            }
            Kind::SigmaPower { k, power } => {
                let s = elementary_symmetric(lambda)[*k];
                let scale = power * s.powf(power - 1.0);
                sigma_k_gradient(lambda, *k)?
                    .into_iter()
                    .map(|g| scale * g)
                    .collect()
            }
            Kind::Custom { grad, .. } => grad(lambda),
            Kind::Homogenized(base) => {
                // f̃_i = f_i(μ) / Σ_j f_j(μ) μ_j with μ = φ(λ)λ
                let phi = ray_normalizer(base, lambda)?;
                let mu: Vec<f64> = lambda.iter().map(|x| phi * x).collect();
                let g = base.gradient_in_cone(&mu)?;
                let euler: f64 = g.iter().zip(&mu).map(|(a, b)| a * b).sum();
                g.into_iter().map(|gi| gi / euler).collect()
            }
            Kind::Homotopy { base, t } => {
                let g = base.gradient_in_cone(&homotopy_point(lambda, *t))?;
                let total: f64 = g.iter().sum();
                g.into_iter().map(|gi| t * gi + (1.0 - t) * total).collect()
            }
        })
    }
}

/// `φ(λ) > 0` with `f(φ(λ)λ) = 1`.
fn ray_normalizer(op: &CurvatureOperator, lambda: &[f64]) -> Result<f64> {
    let scaled = |s: f64| -> Vec<f64> { lambda.iter().map(|x| s * x).collect() };
    let g = |s: f64| op.value(&scaled(s)).ok().map(|v| v - 1.0);
    let dg = |s: f64| {
        op.gradient(&scaled(s))
            .ok()
            .map(|gr| gr.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>())
    };
    roots::positive_root(
        g,
        Some(dg),
        super::cone::RAY_SCALE_MIN,
        super::cone::RAY_SCALE_MAX,
        RAY_ROOT_TOL,
    )
}

/// Degree-one operator `f̃ = 1/φ` with `f(φ(λ)λ) = 1`; same unit level set
/// and the same cone as `op`.
pub fn homogenize(op: &CurvatureOperator) -> CurvatureOperator {
    CurvatureOperator {
        n: op.n,
        name: format!("homogenized({})", op.name),
        kind: Kind::Homogenized(Arc::new(op.clone())),
        cone: op.cone.clone(),
        degree: Some(1.0),
    }
}

/// `f_t(λ) = f(tλ + (1−t)σ_1(λ)e)` on `Γ_t`.
pub fn homotopy_operator(op: &CurvatureOperator, t: f64) -> Result<CurvatureOperator> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("homotopy parameter {t} outside [0, 1]")));
    }
    if t == 1.0 {
        return Ok(op.clone());
    }
    Ok(CurvatureOperator {
        n: op.n,
        name: format!("homotopy({}, t={t})", op.name),
        kind: Kind::Homotopy {
            base: Arc::new(op.clone()),
            t,
        },
        cone: ConeSpec::homotopy(op.cone.clone(), t),
        degree: op.degree,
    })
}

/// `∂f_t(λ)/∂t = ∇f(μ)·(λ − σ_1(λ)e)` with `μ = tλ + (1−t)σ_1(λ)e`.
pub fn homotopy_t_derivative(op: &CurvatureOperator, t: f64, lambda: &[f64]) -> Result<f64> {
    let mu = homotopy_point(lambda, t);
    let g = op.gradient(&mu)?;
    let s = sigma_1(lambda);
    Ok(g.iter().zip(lambda).map(|(gi, li)| gi * (li - s)).sum())
}

/// The unique `μ > 0` with `f(μe) = 1`.
pub fn mu_star(op: &CurvatureOperator) -> Result<f64> {
    let e = vec![1.0; op.n];
    ray_normalizer(op, &e).map_err(|err| match err {
        Error::NonConvergence(msg) => Error::NonConvergence(format!(
            "f(μe) = 1 has no root; the operator violates ray growth ({msg})"
        )),
        other => other,
    })
}

/// The set `V = {f > 1}` of an operator as a cone generator (`f` taken as 0
/// outside its cone).
pub fn superlevel_set(op: &CurvatureOperator) -> LevelSet {
    let op = op.clone();
    LevelSet::new(format!("{{{} > 1}}", op.name()), move |l: &[f64]| {
        op.value(l).unwrap_or(0.0)
    })
}
