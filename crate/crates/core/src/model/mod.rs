//! Queueing primitives: service curves, distributions, drift and the
//! workload/headcount maps.

mod birth_death;
mod collapse;
mod curve;
mod dist;
mod drift;
mod input;

pub use birth_death::{birth_death_pi, BirthDeathDistribution, DEFAULT_TAIL_TOL};
pub use collapse::{delta_inverse, delta_map};
pub(crate) use collapse::{delta_inverse_raw, delta_raw};
pub use curve::{CurveSpec, ServiceRateCurve};
pub use dist::{Distribution, Family};
pub use drift::{
    default_mu_grid, default_pi_grid, drift_from_mu, drift_from_pi, uniform_grid, DriftFunction, DriftProvenance,
    LogDensity, DRIFT_GRID_STEP,
};
pub use input::{InputProcess, InputSpec};
