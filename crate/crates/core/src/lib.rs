//! Projection-based first-order constrained optimization.
//!
//! * [`projection`]: analytical Euclidean projections onto geometric sets.
//! * [`spg`]: spectral projected gradient descent with nonmonotone line search.
//! * [`al`]: augmented-Lagrangian outer loop over SPG for problems with
//!   several set-membership constraints `g_i(x) in C_i`.
//! * [`shooting`]: direct-shooting optimal control, with a matrix-free
//!   Jacobian-transpose recursion and a receding-horizon loop.
//! * [`ilqr`]: unconstrained iLQR, kept as a comparison baseline.
//! * [`models`]: planar arm, double integrator, pusher-slider and the
//!   chance-constraint map used by robust IK.

pub mod al;
pub mod projection;
pub mod ilqr;
pub mod models;
pub mod report;
pub mod shooting;
pub mod spg;

pub use al::{
    al_gradient, al_value, alspg_solve, alspg_solve_warm, reduce_inequalities, spg_solve_problem, AlspgOptions,
    AlspgSolution, BlockState, ConstraintBlock, ConstraintMap, FnMap, NlpProblem, Problem,
};
pub use projection::{HalfspaceRow, ProjectionError, ProjectionSet};
pub use report::{Counters, SolveReport, Termination};
pub use spg::{spg_minimize, Objective, Spg, SpgOptions};
pub use shooting::{
    build_oc_problem, jac_transpose_vec, linearize, mpc_loop, rollout, Dynamics, LinearizedDynamics, OcProblem,
    QuadraticCost, StateSelector, Trajectory, TrajectoryCost,
};
pub use ilqr::{ilqr_solve, IlqrOptions, IlqrSolution};
