use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues of a Schouten-type matrix, `n >= 3` finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EigenVec(Vec<f64>);

impl EigenVec {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 3 {
            return Err(Error::Domain(format!(
                "dimension must be at least 3, got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite eigenvalue {bad}")));
        }
        Ok(Self(entries))
    }

    /// `c·(1, …, 1)` in dimension `n`.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with entries in ascending order.
    pub fn sorted(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        Self(v)
    }

    /// `‖self − other‖∞` after sorting both.
    pub fn sorted_distance(&self, other: &EigenVec) -> f64 {
        let a = self.sorted();
        let b = other.sorted();
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for EigenVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for EigenVec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EigenVec> for Vec<f64> {
    fn from(v: EigenVec) -> Vec<f64> {
        v.0
    }
}

/// All elementary symmetric polynomials `σ_0 = 1, σ_1, …, σ_n` of `λ`.
///
/// Entries are processed in ascending order, so the result is exactly
/// invariant under permutations of the input.
pub fn elementary_symmetric(lambda: &[f64]) -> Vec<f64> {
    let mut sorted = lambda.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &x) in sorted.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// `σ_k(λ)` for `1 <= k <= n`.
pub fn sigma_k(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    Ok(elementary_symmetric(lambda)[k])
}

/// `σ_1(λ)`, the plain sum.
pub fn sigma_1(lambda: &[f64]) -> f64 {
    elementary_symmetric(lambda)[1]
}

/// `∂σ_k/∂λ_i = σ_{k−1}(λ with entry i removed)` for every `i`.
pub fn sigma_k_gradient(lambda: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = lambda.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} outside 1..={n}")));
    }
    Ok((0..n)
        .map(|i| {
            let rest: Vec<f64> = lambda
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            elementary_symmetric(&rest)[k - 1]
        })
        .collect())
}

/// `R_g = 2(n−1)·σ_1(λ(A_g))`.
pub fn scalar_curvature(lambda: &[f64]) -> f64 {
    2.0 * (lambda.len() as f64 - 1.0) * sigma_1(lambda)
}

/// Binomial coefficient as a float, `σ_k(e)`.
pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
