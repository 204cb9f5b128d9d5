//! Solver for `f(λ(A_ĝ)) = 1` with `ĝ = u^{4/(n−2)}(dt² + g_{S^{n−1}})` on
//! `S¹(L) × S^{n−1}`, for `u` depending on the circle variable only.

mod grid;
mod solver;

pub use grid::{PeriodicGrid, Scheme};
pub use solver::{
    check_admissible, constant_solution, continuation, fd_jacobian, jacobian, newton_solve,
    node_eigenvalues, residual, ContinuationStep, ContinuationTrace, IterRecord, NewtonOptions,
    NewtonSolution,
};
