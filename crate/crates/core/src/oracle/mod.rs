//! Independent exact ground truth for mixture questions.

pub mod linear;
pub mod pattern;
pub mod secant;

pub use linear::{solve_linear, LinearOutcome, LinearSystem, Relation};
pub use pattern::{
    k_star_feasible, mixture_feasible, Feasibility, FeasibilityStatus, OracleConfig, OracleError, SignMode,
};
pub use secant::{cut_obstruction, delta2n_points, secant_membership, star_rank_bounds};
