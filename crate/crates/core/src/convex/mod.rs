//! Approximate smooth convex programming and its max-flow instance.

pub mod flow;
pub mod program;
pub mod projection;

pub use flow::{
    check_flow, max_flow, max_flow_with, FlowCandidate, FlowNetwork, FlowReport, FlowSolution,
};
pub use program::{
    auto_rounds, cp_infimum, cp_objective, cp_step_sizes, max_gradient_norm_on, solve_cp,
    Constraints, CpOptions, CpReport, CpSolution, LinearConstraints, Rounds, SmoothCP,
    FEASIBILITY_TOL,
};
pub use projection::{project_affine, AffineConstraints, PROJECTION_TOL};
