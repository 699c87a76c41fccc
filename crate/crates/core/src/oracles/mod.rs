//! Independent validators. Nothing here calls into the production numerical
//! modules; the point is to have a second opinion.

pub mod allocation;
pub mod bigbessel;
pub mod fd_dyadic;
pub mod golden;
pub mod miller;
pub mod report;
pub mod residual;

pub use allocation::{allocation_grid_oracle, Constraint, GridOptimum};
pub use bigbessel::{specfun_oracle, OracleJY};
pub use report::OracleReport;
pub use residual::{boundary_residual, boundary_residuals};
