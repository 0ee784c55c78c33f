//! Stationary laws of reflected diffusions and the static-`K` approximations.

mod static_k;
mod stationary;

pub use static_k::{
    approx_argmin_k, approx_mean_by_k, default_w_max, default_workload_grid, density_exponent, lattice_mean_numjobs,
    static_approx, static_mean_numjobs, static_numjobs_cdf, static_workload_cdf, StaticApproxReport,
};
pub use stationary::{rbm_stationary, workload_grid, StationaryLaw, DEFAULT_POINTS, TAIL_ERROR, TAIL_WARN};
