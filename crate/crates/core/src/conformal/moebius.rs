use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::field::Jet;

/// Points closer than this to an inversion pole are refused.
pub const POLE_EPS: f64 = 1e-300;

/// Generators of the Möbius group of ℝⁿ ∪ {∞}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "arg", rename_all = "snake_case")]
pub enum Generator {
    Translate(Vec<f64>),
    Scale(f64),
    /// `x ↦ x/|x|²`.
    Invert,
}

impl Generator {
    pub fn inverse(&self) -> Generator {
        match self {
            Generator::Translate(v) => Generator::Translate(v.iter().map(|x| -x).collect()),
            Generator::Scale(c) => Generator::Scale(1.0 / c),
            Generator::Invert => Generator::Invert,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Generator::Translate(v) => x.iter().zip(v).map(|(a, b)| a + b).collect(),
            Generator::Scale(c) => x.iter().map(|a| c * a).collect(),
            Generator::Invert => {
                let r2 = norm2(x);
                if r2 <= POLE_EPS {
                    return Err(Error::Singularity { point: x.to_vec() });
                }
                x.iter().map(|a| a / r2).collect()
            }
        })
    }

    /// Determinant of the derivative at `x`.
    pub fn jacobian_det(&self, x: &[f64]) -> Result<f64> {
        let n = x.len() as f64;
        Ok(match self {
            Generator::Translate(_) => 1.0,
            Generator::Scale(c) => c.powi(x.len() as i32),
            Generator::Invert => {
                let r2 = norm2(x);
                if r2 <= POLE_EPS {
                    return Err(Error::Singularity { point: x.to_vec() });
                }
                -r2.powf(-n)
            }
        })
    }

    /// Jet of `u_g = |J_g|^{(n−2)/(2n)}(u∘g)` at `x`, given the jet of `u`
    /// at `g(x)`.
    pub fn pull_jet(&self, x: &[f64], at_image: &Jet) -> Result<Jet> {
        let n = x.len();
        Ok(match self {
            Generator::Translate(_) => at_image.clone(),
            Generator::Scale(c) => {
                let k = c.abs().powf((n as f64 - 2.0) / 2.0);
                Jet {
                    value: k * at_image.value,
                    gradient: &at_image.gradient * (k * c),
                    hessian: &at_image.hessian * (k * c * c),
                }
            }
            Generator::Invert => kelvin_jet(x, at_image)?,
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Generator::Translate(v) if v.len() != n => Err(Error::Domain(format!(
                "translation of length {} in dimension {n}",
                v.len()
            ))),
            Generator::Scale(c) if *c == 0.0 || !c.is_finite() => {
                Err(Error::Domain(format!("scale factor must be nonzero, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

/// Kelvin transform `|x|^{2−n} u(x/|x|²)` differentiated twice.
fn kelvin_jet(x: &[f64], at: &Jet) -> Result<Jet> {
    let n = x.len();
    let r2 = norm2(x);
    if r2 <= POLE_EPS {
        return Err(Error::Singularity { point: x.to_vec() });
    }
    let nf = n as f64;
    // derivative of y = x/|x|²
    let dy = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d / r2 - 2.0 * x[i] * x[j] / (r2 * r2)
    });
    let d2y = |i: usize, j: usize, k: usize| {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        -2.0 * (d(i, j) * x[k] + d(i, k) * x[j] + d(j, k) * x[i]) / (r2 * r2)
            + 8.0 * x[i] * x[j] * x[k] / (r2 * r2 * r2)
    };
    let u = at.value;
    let g = &at.gradient;
    let grad_u = dy.transpose() * g;
    let mut hess_u = dy.transpose() * &at.hessian * &dy;
    for j in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += g[i] * d2y(i, j, k);
            }
            hess_u[(j, k)] += s;
        }
    }
    let w = r2.powf((2.0 - nf) / 2.0);
    let xv = DVector::from_column_slice(x);
    let grad_w = &xv * ((2.0 - nf) * r2.powf(-nf / 2.0));
    let hess_w = (DMatrix::identity(n, n) * r2.powf(-nf / 2.0)
        - &xv * xv.transpose() * (nf * r2.powf(-nf / 2.0 - 1.0)))
        * (2.0 - nf);
    let value = w * u;
    let gradient = &grad_w * u + &grad_u * w;
    let hessian = hess_w * u + &grad_w * grad_u.transpose() + &grad_u * grad_w.transpose() + hess_u * w;
    Ok(Jet {
        value,
        gradient,
        hessian: symmetrize(hessian),
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// A word in the generators, applied left to right: `[g₁, g₂]` is `g₂∘g₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    n: usize,
    word: Vec<Generator>,
}

impl MoebiusMap {
    pub fn new(n: usize, word: Vec<Generator>) -> Result<Self> {
        for g in &word {
            g.check_dim(n)?;
        }
        Ok(Self { n, word })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, word: Vec::new() }
    }

    /// `y ↦ x + λ²(y−x)/|y−x|²`, the inversion in the sphere `∂B_λ(x)`.
    pub fn sphere_inversion(center: &[f64], radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        Self::new(
            center.len(),
            vec![
                Generator::Translate(center.iter().map(|c| -c).collect()),
                Generator::Scale(1.0 / radius),
                Generator::Invert,
                Generator::Scale(radius),
                Generator::Translate(center.to_vec()),
            ],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    /// Map that applies `self`, then `next`.
    pub fn then(&self, next: &MoebiusMap) -> MoebiusMap {
        let mut word = self.word.clone();
        word.extend(next.word.iter().cloned());
        MoebiusMap { n: self.n, word }
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            n: self.n,
            word: self.word.iter().rev().map(Generator::inverse).collect(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for g in &self.word {
            y = g.apply(&y)?;
        }
        Ok(y)
    }

    pub fn jacobian_det(&self, x: &[f64]) -> Result<f64> {
        let mut y = x.to_vec();
        let mut det = 1.0;
        for g in &self.word {
            det *= g.jacobian_det(&y)?;
            y = g.apply(&y)?;
        }
        Ok(det)
    }

    /// Finite points where evaluating the word hits an inversion at the
    /// origin.
    pub fn poles(&self) -> Vec<Vec<f64>> {
        let mut poles = Vec::new();
        for (i, g) in self.word.iter().enumerate() {
            if *g != Generator::Invert {
                continue;
            }
            let mut y = vec![0.0; self.n];
            let mut finite = true;
            for h in self.word[..i].iter().rev() {
                match h.inverse().apply(&y) {
                    Ok(z) => y = z,
                    Err(_) => {
                        finite = false;
                        break;
                    }
                }
            }
            if finite {
                poles.push(y);
            }
        }
        poles
    }

    /// Jet of `u_ψ` at `x` from a closure giving the jet of `u`.
    pub fn pull_jet(&self, x: &[f64], jet_of_u: impl Fn(&[f64]) -> Result<Jet>) -> Result<Jet> {
        let mut points = vec![x.to_vec()];
        for g in &self.word {
            let next = g.apply(points.last().unwrap())?;
            points.push(next);
        }
        let mut jet = jet_of_u(points.last().unwrap())?;
        for (g, p) in self.word.iter().zip(&points).rev() {
            jet = g.pull_jet(p, &jet)?;
        }
        Ok(jet)
    }

    /// `|J_ψ(x)|^{(n−2)/(2n)}`.
    pub fn conformal_weight(&self, x: &[f64]) -> Result<f64> {
        let n = self.n as f64;
        Ok(self.jacobian_det(x)?.abs().powf((n - 2.0) / (2.0 * n)))
    }
}
