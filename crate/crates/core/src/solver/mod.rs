//! Factorization algorithms.

pub mod alternating;
pub mod simplex_ls;
pub mod spa;

pub use alternating::{
    logdet_regularized, penalized_objective, recover_h, solve_minvol, w_gradient, weighted_objective, IterationCounts, SolveResult, SolverConfig, TraceEntry,
    WStep,
};
pub use simplex_ls::{nearest_in_hull, project_simplex, simplex_ls, NearestPoint, SimplexFit, SimplexLs};
pub use spa::spa;
