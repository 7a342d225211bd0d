//! Independent verification path: a dense simplex solver, the restricted
//! and data-dependent delta programs, and exact delta audits of mechanism
//! matrices.

mod audit;
mod exact;
mod programs;
mod simplex;

pub use audit::{
    audit_delta, event_delta, min_epsilon_for_singular_delta, singular_delta, DeltaAudit, Direction,
    SingularDelta, Witness,
};
pub use exact::solve_simplex_exact;
pub use programs::{
    restricted_lp, solve_general_lp, solve_restricted_lp, GeneralLp, GeneralSolution, LeverIndex,
    DEFAULT_VARIABLE_BUDGET,
};
pub use simplex::{
    solve_simplex, Constraint, LinearProgram, LpSolution, LpStatus, Relation, FEASIBILITY_TOL, PIVOT_TOL,
};
