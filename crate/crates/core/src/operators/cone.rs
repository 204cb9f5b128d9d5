use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::sigma::{elementary_symmetric, sigma_1};

/// Largest ray multiple probed when deciding membership in a generated cone.
pub const RAY_SCALE_MAX: f64 = 1e9;
/// Smallest ray multiple probed.
pub const RAY_SCALE_MIN: f64 = 1e-9;

/// Smooth symmetric function `g` whose superlevel set `V = {g > 1}` generates
/// a cone `Γ(V) = {sλ : s > 0, λ ∈ V}`.
#[derive(Clone)]
pub struct LevelSet {
    name: String,
    g: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl LevelSet {
    pub fn new(name: impl Into<String>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        (self.g)(lambda)
    }

    /// `λ ∈ V`.
    pub fn contains(&self, lambda: &[f64]) -> bool {
        self.eval(lambda) > 1.0
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelSet({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum ConeKind {
    /// Gårding cone `Γ_k`.
    GammaK(usize),
    /// Cone generated by a convex symmetric superlevel set.
    GammaOfV(LevelSet),
    /// `Γ_t = {λ : tλ + (1−t)σ_1(λ)e ∈ Γ}`.
    Homotopy { base: Box<ConeSpec>, t: f64 },
}

/// An open convex symmetric cone in ℝⁿ.
#[derive(Clone, Debug)]
pub struct ConeSpec {
    n: usize,
    kind: ConeKind,
}

impl ConeSpec {
    pub fn gamma_k(n: usize, k: usize) -> Result<Self> {
        if n < 3 || k == 0 || k > n {
            return Err(Error::Domain(format!("Γ_k needs n >= 3 and 1 <= k <= n, got n={n}, k={k}")));
        }
        Ok(Self {
            n,
            kind: ConeKind::GammaK(k),
        })
    }

    pub fn generated_by(n: usize, v: LevelSet) -> Self {
        Self {
            n,
            kind: ConeKind::GammaOfV(v),
        }
    }

    pub fn homotopy(base: ConeSpec, t: f64) -> Self {
        Self {
            n: base.n,
            kind: ConeKind::Homotopy {
                base: Box::new(base),
                t,
            },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        if lambda.len() != self.n {
            return false;
        }
        match &self.kind {
            ConeKind::GammaK(k) => in_gamma_k(lambda, *k),
            ConeKind::GammaOfV(v) => {
                let far: Vec<f64> = lambda.iter().map(|x| x * RAY_SCALE_MAX).collect();
                v.contains(&far)
            }
            ConeKind::Homotopy { base, t } => base.contains(&homotopy_point(lambda, *t)),
        }
    }

    /// Signed proxy for the distance to `∂Γ` of the unit vector `λ/|λ|`:
    /// positive inside, zero or negative outside.
    pub fn margin(&self, lambda: &[f64]) -> f64 {
        let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let unit: Vec<f64> = lambda.iter().map(|x| x / norm).collect();
        match &self.kind {
            ConeKind::GammaK(k) => {
                let e = elementary_symmetric(&unit);
                e[1..=*k].iter().copied().fold(f64::INFINITY, f64::min)
            }
            ConeKind::GammaOfV(v) => match cone_ray_scale(v, &unit) {
                Ok(s) => 1.0 / s,
                Err(_) => 0.0,
            },
            ConeKind::Homotopy { base, t } => base.margin(&homotopy_point(&unit, *t)),
        }
    }
}

/// `tλ + (1−t)σ_1(λ)e`.
pub fn homotopy_point(lambda: &[f64], t: f64) -> Vec<f64> {
    let s = sigma_1(lambda);
    lambda.iter().map(|x| t * x + (1.0 - t) * s).collect()
}

/// `λ ∈ Γ_k`, characterized by `σ_j(λ) > 0` for `j = 1..k`.
pub fn in_gamma_k(lambda: &[f64], k: usize) -> bool {
    if k == 0 || k > lambda.len() {
        return false;
    }
    let e = elementary_symmetric(lambda);
    e[1..=k].iter().all(|&s| s > 0.0)
}

/// `s̄ = inf{s > 0 : sλ ∈ V}` so that `s̄λ ∈ ∂V`, located by bisection on the
/// monotone ray to a relative tolerance of `1e-10`.
pub fn cone_ray_scale(v: &LevelSet, lambda: &[f64]) -> Result<f64> {
    let inside = |s: f64| {
        let p: Vec<f64> = lambda.iter().map(|x| x * s).collect();
        v.contains(&p)
    };
    let (mut lo, mut hi);
    if inside(1.0) {
        hi = 1.0;
        lo = 0.5;
        while inside(lo) {
            hi = lo;
            lo *= 0.5;
            if lo < RAY_SCALE_MIN {
                return Err(Error::Domain(format!(
                    "ray through {lambda:?} stays in V down to s = {RAY_SCALE_MIN:e}"
                )));
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while !inside(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > RAY_SCALE_MAX {
                return Err(Error::NotInCone {
                    point: lambda.to_vec(),
                });
            }
        }
    }
    while hi - lo > 1e-10 * hi.min(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::sigma::sigma_k;

    #[test]
    fn membership_examples() {
        assert!(in_gamma_k(&[1.0, 1.0, 1.0], 3));
        assert!(!in_gamma_k(&[-1.0, 1.0, 1.0], 2));
        assert!(in_gamma_k(&[-0.5, 0.5, 0.5, 0.5, 0.5], 2));
    }

    #[test]
    fn ray_scale_examples() {
        let v1 = LevelSet::new("sigma1", |l: &[f64]| l.iter().sum());
        let s = cone_ray_scale(&v1, &[1.0, 1.0, 1.0]).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-10);
        let on_boundary = [0.2, 0.3, 0.5];
        assert!((cone_ray_scale(&v1, &on_boundary).unwrap() - 1.0).abs() < 1e-10);
        let v2 = LevelSet::new("sqrt sigma2", |l: &[f64]| {
            if in_gamma_k(l, 2) {
                sigma_k(l, 2).unwrap().sqrt()
            } else {
                0.0
            }
        });
        let s = cone_ray_scale(&v2, &[1.0, 1.0, 1.0]).unwrap();
        assert!((s - 3f64.powf(-0.5)).abs() < 1e-10);
    }

    #[test]
    fn ray_scale_outside_cone() {
        let v1 = LevelSet::new("sigma1", |l: &[f64]| l.iter().sum());
        assert!(matches!(
            cone_ray_scale(&v1, &[-1.0, 0.1, 0.2]),
            Err(Error::NotInCone { .. })
        ));
    }

    /// Connected component of `{σ_k > 0}` containing `(1,1,1)` on a coarse
    /// grid, found by flood fill, compared with the `σ_j > 0` rule.
    #[test]
    fn flood_fill_agrees_with_characterization() {
        let m = 25usize;
        let coord = |i: usize| -2.0 + 4.0 * (i as f64 + 0.5) / m as f64;
        for k in 1..=3 {
            let positive = |i: usize, j: usize, l: usize| {
                sigma_k(&[coord(i), coord(j), coord(l)], k).unwrap() > 0.0
            };
            let idx = |i: usize, j: usize, l: usize| (i * m + j) * m + l;
            let mut seen = vec![false; m * m * m];
            let start = (m - 1, m - 1, m - 1);
            let mut stack = vec![start];
            seen[idx(start.0, start.1, start.2)] = true;
            while let Some((i, j, l)) = stack.pop() {
                let mut nbrs = Vec::new();
                if i > 0 { nbrs.push((i - 1, j, l)); }
                if j > 0 { nbrs.push((i, j - 1, l)); }
                if l > 0 { nbrs.push((i, j, l - 1)); }
                if i + 1 < m { nbrs.push((i + 1, j, l)); }
                if j + 1 < m { nbrs.push((i, j + 1, l)); }
                if l + 1 < m { nbrs.push((i, j, l + 1)); }
                for (a, b, c) in nbrs {
                    if !seen[idx(a, b, c)] && positive(a, b, c) {
                        seen[idx(a, b, c)] = true;
                        stack.push((a, b, c));
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        let p = [coord(i), coord(j), coord(l)];
                        assert_eq!(
                            seen[idx(i, j, l)],
                            in_gamma_k(&p, k),
                            "k={k} at {p:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn homotopy_cone_at_zero_is_gamma_one() {
        let c = ConeSpec::homotopy(ConeSpec::gamma_k(4, 3).unwrap(), 0.0);
        assert!(c.contains(&[3.0, -1.0, -1.0, -0.5]));
        assert!(!c.contains(&[1.0, -1.0, -0.5, 0.4]));
    }
}
