//! Static-`K` headcount and workload approximations.

use crate::error::Result;
use crate::model::{
    birth_death_pi, delta_inverse_raw, delta_raw, BirthDeathDistribution, InputProcess, LogDensity, ServiceRateCurve,
    DEFAULT_TAIL_TOL,
};

use super::stationary::{workload_grid, StationaryLaw, DEFAULT_POINTS};

/// `(c_s^2 + 1) / (c_s^2 + c_a^2)`.
pub fn density_exponent(input: &InputProcess) -> f64 {
    (input.cs2() + 1.0) / (input.cs2() + input.ca2())
}

/// Right end of the default workload grid: far enough that the powered
/// density has decayed as much as the truncated birth–death tail. The density
/// is evaluated at `w / m_e`, so the range scales with `m_e` past the knee.
pub fn default_w_max(pi: &BirthDeathDistribution, input: &InputProcess) -> f64 {
    let k = pi.k() as f64;
    let e = density_exponent(input);
    let x_end = k + (pi.n_max() as f64 + 1.0 - k) * (1.0f64 / e).max(1.0);
    (x_end * input.m_e()).max(delta_inverse_raw(x_end, k, input.m_e(), input.m()))
}

/// Default workload grid for a static level: uniform with `K m_e` as a knot.
pub fn default_workload_grid(pi: &BirthDeathDistribution, input: &InputProcess) -> Result<Vec<f64>> {
    let knee = pi.k() as f64 * input.m_e();
    workload_grid(default_w_max(pi, input), DEFAULT_POINTS, &[knee])
}

/// Workload law `P{W ≤ w} = α ∫₀^{w/m_e} f(x)^e dx`.
pub fn static_workload_cdf(pi: &BirthDeathDistribution, input: &InputProcess, grid: &[f64]) -> Result<StationaryLaw> {
    input.require_diffusion()?;
    let logf = LogDensity::from_pi(pi)?;
    let e = density_exponent(input);
    let m_e = input.m_e();
    let density: Vec<f64> = grid.iter().map(|&w| (e * logf.log_f(w / m_e)).exp()).collect();
    let w_last = *grid.last().unwrap();
    // decay of f^e per unit workload at the right end
    let x_last = w_last / m_e;
    let decay = -e * logf.dlog_f(x_last) / m_e;
    StationaryLaw::from_density(grid.to_vec(), density, decay)
}

/// Headcount law: the workload law pushed through the collapse map at level `K`.
pub fn static_numjobs_cdf(workload: &StationaryLaw, input: &InputProcess, k: f64) -> StationaryLaw {
    let (m_e, m) = (input.m_e(), input.m());
    let knee = k * m_e;
    let grid = workload.grid().iter().map(|&w| delta_raw(w, k, m_e, m)).collect();
    let pdf = workload
        .grid()
        .iter()
        .zip(workload.pdf())
        .map(|(&w, &p)| if w <= knee { p * m_e } else { p * m })
        .collect();
    workload.with_grid(grid, pdf)
}

/// Discrete approximation to the mean headcount from powered birth–death masses.
pub fn static_mean_numjobs(pi: &BirthDeathDistribution, input: &InputProcess) -> Result<f64> {
    input.require_diffusion()?;
    let e = density_exponent(input);
    let k = pi.k();
    let stretch = 0.5 * (input.cs2() + 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (n, &p) in pi.pi().iter().enumerate() {
        let pe = if e == 1.0 { p } else { p.powf(e) };
        num += (n.min(k) as f64 + stretch * n.saturating_sub(k) as f64) * pe;
        den += pe;
    }
    Ok(num / den)
}

/// Mean headcount read off a continuous headcount law on the integer lattice
/// the discrete masses live on: `Σ_{n ≤ K} P{X > n}` plus the stretched sum
/// past `K`.
pub fn lattice_mean_numjobs(numjobs: &StationaryLaw, k: usize, input: &InputProcess) -> f64 {
    let stretch = input.m_e() / input.m();
    let x_max = numjobs.w_max();
    let mut total: f64 = (1..=k).map(|n| 1.0 - numjobs.cdf_at(n as f64)).sum();
    let mut j = 1usize;
    loop {
        let x = k as f64 + j as f64 * stretch;
        if x >= x_max {
            break;
        }
        total += stretch * (1.0 - numjobs.cdf_at(x));
        j += 1;
    }
    total
}

/// Static-`K` summary.
#[derive(Clone, Debug)]
pub struct StaticApproxReport {
    pub k: usize,
    /// Discrete mean-headcount approximation.
    pub e_n: f64,
    /// Mean of the approximate workload law.
    pub e_w: f64,
    /// Lattice mean of the continuous headcount law; tracks `e_n`.
    pub e_n_lattice: f64,
    pub exponent: f64,
    pub workload_cdf: StationaryLaw,
    pub numjobs_cdf: StationaryLaw,
}

pub fn static_approx(curve: &ServiceRateCurve, input: &InputProcess, k: usize) -> Result<StaticApproxReport> {
    let pi = birth_death_pi(curve, input, k, DEFAULT_TAIL_TOL)?;
    let grid = default_workload_grid(&pi, input)?;
    let workload_cdf = static_workload_cdf(&pi, input, &grid)?;
    let numjobs_cdf = static_numjobs_cdf(&workload_cdf, input, k as f64);
    Ok(StaticApproxReport {
        k,
        e_n: static_mean_numjobs(&pi, input)?,
        e_w: workload_cdf.mean(),
        e_n_lattice: lattice_mean_numjobs(&numjobs_cdf, k, input),
        exponent: density_exponent(input),
        workload_cdf,
        numjobs_cdf,
    })
}

/// Discrete mean approximation for every stable level in `ks`; unstable levels
/// are reported as errors in place.
pub fn approx_mean_by_k(
    curve: &ServiceRateCurve,
    input: &InputProcess,
    ks: impl IntoIterator<Item = usize>,
) -> Vec<(usize, Result<f64>)> {
    ks.into_iter()
        .map(|k| {
            let r = birth_death_pi(curve, input, k, DEFAULT_TAIL_TOL).and_then(|pi| static_mean_numjobs(&pi, input));
            (k, r)
        })
        .collect()
}

/// Level with the smallest approximate mean among the stable ones (ties to the
/// smaller level).
pub fn approx_argmin_k(rows: &[(usize, Result<f64>)]) -> Option<usize> {
    rows.iter()
        .filter_map(|(k, r)| r.as_ref().ok().map(|v| (*k, *v)))
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}
