//! Spectral collocation for delay and functional differential equations.
//!
//! Solutions are represented by their values at Chebyshev-Lobatto points on
//! one or more panels (or at equispaced points for periodic problems).
//! Equations are written as [`exprgraph::OpExpr`] residuals and solved with
//! Newton's method on the resulting square collocation system.

pub mod blocksys;
pub mod catalog;
pub mod error;
pub mod exprgraph;
pub mod interp;
pub mod matrix;
pub mod mesh;
pub mod periodic;
pub mod solve;

pub use blocksys::{BlockSystem, Constraint, Discretization, HistorySpec};
pub use error::{Error, Result};
pub use exprgraph::{DelayMap, OpExpr, PointFn};
pub use interp::{cheb_grid, trig_grid, Grid, GridKind, SampledFunction};
pub use matrix::Matrix;
pub use mesh::{build_piecewise_grid, PiecewiseFunction, PiecewiseGrid};
