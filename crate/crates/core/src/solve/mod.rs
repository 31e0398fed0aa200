//! Linear algebra and nonlinear drivers.

mod eig;
mod functional;
mod lu;
mod newton;

pub use eig::{
    eig_generalized, eig_smoothest, hessenberg_eigenvalues, refine_eigenvalue, tail_fraction, EigPair, EigResult,
};
pub use functional::functional_equation;
pub use lu::{cond_inf, lu_solve, Lu};
pub use newton::{
    newton, solve_linear, Iteration, LinearSolution, NewtonOptions, NewtonReport, NewtonSolution, Problem,
};
