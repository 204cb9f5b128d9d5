//! Symmetric functions, Gårding cones and curvature operators `(f, Γ)`.

mod cone;
mod operator;
mod sigma;
mod validate;

pub use cone::{cone_ray_scale, homotopy_point, in_gamma_k, ConeKind, ConeSpec, LevelSet};
pub use operator::{
    homogenize, homotopy_operator, homotopy_t_derivative, make_sigma_k_operator,
    make_sigma_power_operator, mu_star, superlevel_set, CurvatureOperator,
};
pub use sigma::{
    binomial, elementary_symmetric, scalar_curvature, sigma_1, sigma_k, sigma_k_gradient, EigenVec,
};
pub use validate::{sample_cone, validate_operator, CheckResult, ValidationReport};
