//! Average-cost diffusion control: pointwise argmin, the fluid continuation,
//! binary search and Newton solvers, and policy rounding.

mod argmin;
pub mod ode;
mod policy;
mod solver;

pub use argmin::{fluid_policy, inner_argmin, ArgminContext, DEFAULT_ARGMIN_POINTS};
pub use ode::{integrate, OdeOptions, OdeOutcome, Trajectory};
pub use policy::{
    discretize_policy, round_half_up, round_up, DynamicPolicy, RoundingRule, PolicyDocument, PolicyMetadata, SolverKind, ValueGradientTable,
    POLICY_FORMAT_VERSION,
};
pub use solver::{
    fluid_continuation_gradient, forward_gradient, initial_continuation_point, newton_residual, solve_binary_search, solve_newton, solve_with_doubling,
    test_feasibility, BinarySearchSolution, DoublingRung, DoublingSolution, Feasibility, FluidGradient, NewtonSolution,
    NewtonStep, SearchStep, SolverOptions,
};
