//! Conformal Schouten calculus on flat domains and on `S¹(L) × S^{n−1}`,
//! Möbius maps and the pullbacks they induce on conformal factors.

mod checks;
mod field;
mod moebius;
mod schouten;

pub use checks::{
    catalog_fields, conjugation_residual, conjugation_suite, log_slope, random_moebius,
    sample_away_from_poles, superharmonic_check, DISTORTION_RANGE, ConjugationReport, SuperharmonicReport,
};
pub use field::{
    jet_at, pullback_u, sphere_inversion_u, CircleModeField, ConstantField, DerivativeMode, Domain,
    FieldSpec, GaussianField, InversePowerField, Jet, ParaboloidField, PullbackField, ScalarField,
    SphereInversionField, SumField,
};
pub use moebius::{Generator, MoebiusMap};
pub use schouten::{
    a_matrix_flat, a_matrix_from_jet, product_background, product_eigen_pair, product_eigenvalues,
    schouten_eigen_flat, schouten_eigen_product, ConformalMatrix,
};
