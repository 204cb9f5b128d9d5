//! Numerical toolkit for conformally invariant fully nonlinear equations
//! `f(λ(A^u)) = 1`: symmetric curvature operators and their cones, the
//! conformal Schouten calculus with Möbius covariance, closed-form bubble
//! solutions, radial shooting, moving-sphere sweeps and a continuation
//! solver on `S¹(L) × S^{n−1}`.

pub mod cli;
pub mod conformal;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod gradient_lemma;
pub mod moving_sphere;
pub mod operators;
pub mod parallel;
pub mod radial;
pub mod roots;
pub mod sampling;
pub mod yamabe;

pub use error::{Error, Result};
