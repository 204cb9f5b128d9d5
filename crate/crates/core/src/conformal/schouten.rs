use nalgebra::DMatrix;

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::operators::EigenVec;

use super::field::{jet_at, DerivativeMode, Jet, ScalarField};

/// The symmetric matrix `A^u(x)` (or `A_ĝ` at a point).
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalMatrix(DMatrix<f64>);

impl ConformalMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> Result<EigenVec> {
        EigenVec::new(symmetric_eigenvalues(&self.0))
    }

    /// `max |A_ij − c·δ_ij|`.
    pub fn distance_to_multiple_of_identity(&self, c: f64) -> f64 {
        let n = self.0.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { c } else { 0.0 };
                worst = worst.max((self.0[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// `A^u = −(2/(n−2))u^{−(n+2)/(n−2)}∇²u + (2n/(n−2)²)u^{−2n/(n−2)}∇u⊗∇u
///        − (2/(n−2)²)u^{−2n/(n−2)}|∇u|²I` from a jet.
pub fn a_matrix_from_jet(jet: &Jet) -> Result<ConformalMatrix> {
    let n = jet.gradient.len();
    if n < 3 {
        return Err(Error::Domain(format!("A^u needs n >= 3, got {n}")));
    }
    let u = jet.value;
    if !(u > 0.0) {
        return Err(Error::Positivity {
            point: Vec::new(),
            value: u,
        });
    }
    let nf = n as f64;
    let m = nf - 2.0;
    let c_hess = -2.0 / m * u.powf(-(nf + 2.0) / m);
    let w = u.powf(-2.0 * nf / m);
    let c_outer = 2.0 * nf / (m * m) * w;
    let c_id = -2.0 / (m * m) * w * jet.gradient.norm_squared();
    let g = &jet.gradient;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let h = 0.5 * (jet.hessian[(i, j)] + jet.hessian[(j, i)]);
            let mut v = c_hess * h + c_outer * g[i] * g[j];
            if i == j {
                v += c_id;
            }
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(ConformalMatrix(a))
}

pub fn a_matrix_flat(u: &dyn ScalarField, x: &[f64], mode: DerivativeMode) -> Result<ConformalMatrix> {
    let jet = jet_at(u, x, mode)?;
    a_matrix_from_jet(&jet)
}

/// Ascending eigenvalues of `A^u(x)`.
pub fn schouten_eigen_flat(u: &dyn ScalarField, x: &[f64], mode: DerivativeMode) -> Result<EigenVec> {
    a_matrix_flat(u, x, mode)?.eigenvalues()
}

/// `λ(A_g) = (−1/2, 1/2, …, 1/2)` of `S¹(L) × S^{n−1}(1)`.
pub fn product_background(n: usize) -> Result<EigenVec> {
    let mut v = vec![0.5; n];
    v[0] = -0.5;
    EigenVec::new(v)
}

/// Schouten eigenvalues of `v^{4/(n−2)}(dt² + g_{S^{n−1}})` for `v = v(t)`:
/// `(λ_t, λ_s, …, λ_s)` with `λ_s` repeated `n−1` times.
pub fn product_eigenvalues(n: usize, v: f64, vp: f64, vpp: f64) -> Result<EigenVec> {
    let (lt, ls) = product_eigen_pair(n, v, vp, vpp)?;
    let mut e = vec![ls; n];
    e[0] = lt;
    EigenVec::new(e)
}

/// `(λ_t, λ_s)` of the conformal product metric.
pub fn product_eigen_pair(n: usize, v: f64, vp: f64, vpp: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::Domain(format!("n must be at least 3, got {n}")));
    }
    if !(v > 0.0) {
        return Err(Error::Positivity {
            point: Vec::new(),
            value: v,
        });
    }
    let m = n as f64 - 2.0;
    let w = v.powf(-4.0 / m);
    let q = (vp / v).powi(2);
    let lt = w * (-2.0 / m * vpp / v + 2.0 * (n as f64 - 1.0) / (m * m) * q - 0.5);
    let ls = w * (-2.0 / (m * m) * q + 0.5);
    Ok((lt, ls))
}

/// Schouten eigenvalues on the product at parameter `t` for a field on the circle.
pub fn schouten_eigen_product(v: &dyn ScalarField, t: f64, n: usize, mode: DerivativeMode) -> Result<EigenVec> {
    if v.dim() != 1 {
        return Err(Error::Domain("product background needs a field on the circle".into()));
    }
    let jet = jet_at(v, &[t], mode)?;
    product_eigenvalues(n, jet.value, jet.gradient[0], jet.hessian[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::field::{CircleModeField, ConstantField, InversePowerField};
    use crate::operators::make_sigma_k_operator;

    #[test]
    fn constant_field_has_zero_matrix() {
        let u = ConstantField { n: 4, c: 1.0 };
        let a = a_matrix_flat(&u, &[0.1, 0.2, 0.3, 0.4], DerivativeMode::Analytic).unwrap();
        assert_eq!(a.distance_to_multiple_of_identity(0.0), 0.0);
    }

    #[test]
    fn fundamental_solution_is_flat() {
        let u = InversePowerField { scale: 1.0, center: vec![0.0; 3] };
        let a = a_matrix_flat(&u, &[0.4, -0.7, 1.1], DerivativeMode::Analytic).unwrap();
        assert!(a.distance_to_multiple_of_identity(0.0) < 1e-13);
    }

    #[test]
    fn nonpositive_field_rejected() {
        let u = ConstantField { n: 3, c: -1.0 };
        assert!(matches!(
            a_matrix_flat(&u, &[0.0; 3], DerivativeMode::Analytic),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn product_constant_cases() {
        for n in 3..=7 {
            let one = product_eigenvalues(n, 1.0, 0.0, 0.0).unwrap();
            assert_eq!(one, product_background(n).unwrap());
            let c: f64 = 1.7;
            let scaled = product_eigenvalues(n, c, 0.0, 0.0).unwrap();
            let f = c.powf(-4.0 / (n as f64 - 2.0));
            for (a, b) in scaled.iter().zip(one.iter()) {
                assert_eq!(*a, f * b);
            }
        }
    }

    #[test]
    fn product_constant_solution_n5_k2() {
        let c = 2f64.powf(-3.0 / 8.0);
        let v = ConstantField { n: 1, c };
        let l = schouten_eigen_product(&v, 0.3, 5, DerivativeMode::Analytic).unwrap();
        let op = make_sigma_k_operator(5, 2).unwrap();
        assert!((op.value(&l).unwrap() - 1.0).abs() < 1e-14);
    }

    /// Ricci of `S¹ × S^{n−1}`: zero along the circle, `(n−2)g` on the sphere.
    #[test]
    fn background_from_ricci() {
        for n in 3..=8 {
            let nf = n as f64;
            let scal = (nf - 1.0) * (nf - 2.0);
            let mut ric = vec![nf - 2.0; n];
            ric[0] = 0.0;
            let a: Vec<f64> = ric.iter().map(|r| (r - scal / (2.0 * (nf - 1.0))) / (nf - 2.0)).collect();
            for (x, y) in a.iter().zip(product_background(n).unwrap().iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn circle_field_derivatives_used() {
        let v = CircleModeField { length: 1.0, c: 1.0, epsilon: 0.1, mode: 1 };
        let a = schouten_eigen_product(&v, 0.2, 5, DerivativeMode::Analytic).unwrap();
        let b = schouten_eigen_product(&v, 0.2, 5, DerivativeMode::FiniteDifference { h: 1e-3, order: 4 }).unwrap();
        assert!(a.sorted_distance(&b) < 1e-9);
    }
}
