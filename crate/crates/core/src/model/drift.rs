//! Heavy-traffic drift `theta(x)` of the workload diffusion.

use serde::{Deserialize, Serialize};

use super::birth_death::BirthDeathDistribution;
use super::curve::ServiceRateCurve;
use super::input::InputProcess;
use crate::error::{Error, Result};
use crate::pchip::Pchip;

/// Default spacing of drift tables, in jobs.
pub const DRIFT_GRID_STEP: f64 = 1.0 / 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftProvenance {
    /// `-lambda m log(lambda m / mu_hat(x))`.
    FromMu,
    /// `-lambda m d/dx log f(x)` for an interpolated headcount density `f`.
    FromPi,
    /// Supplied directly as a table.
    Tabulated,
}

/// Tabulated drift with its maximizer. `theta` is the monotone cubic through the
/// table and is held constant outside the tabulated range.
#[derive(Clone, Debug)]
pub struct DriftFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Option<Pchip>,
    provenance: DriftProvenance,
    sigma2: f64,
    k_hat: f64,
    theta_hat: f64,
    d_theta: f64,
    // prefix_argmax[i]: first index of the maximum of values[0..=i]
    prefix_argmax: Vec<usize>,
}

impl DriftFunction {
    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, sigma2: f64) -> Result<Self> {
        Self::build(grid, values, DriftProvenance::Tabulated, sigma2)
    }

    /// `theta(x) = theta` for every `x`.
    pub fn constant(theta: f64, sigma2: f64) -> Result<Self> {
        Self::tabulated(vec![0.0, 1.0], vec![theta, theta], sigma2)
    }

    fn build(grid: Vec<f64>, values: Vec<f64>, provenance: DriftProvenance, sigma2: f64) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("theta", "drift table must be finite and match the grid"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("must be finite and > 0, got {sigma2}")));
        }
        let interp = if grid.len() >= 2 {
            Some(Pchip::new(grid.clone(), values.clone())?)
        } else {
            None
        };
        let mut prefix_argmax = Vec::with_capacity(values.len());
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
            prefix_argmax.push(best);
        }
        let top = *prefix_argmax.last().unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            k_hat: grid[top],
            theta_hat: values[top],
            d_theta: values[top] - lo,
            grid,
            values,
            interp,
            provenance,
            sigma2,
            prefix_argmax,
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            self.values[0]
        } else if x >= self.grid[n - 1] {
            self.values[n - 1]
        } else {
            self.interp.as_ref().map_or(self.values[0], |p| p.eval(x))
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Last tabulated point; `theta` is constant from here on.
    pub fn grid_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn provenance(&self) -> DriftProvenance {
        self.provenance
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Most efficient concurrency level (first maximizer on the grid).
    pub fn k_hat(&self) -> f64 {
        self.k_hat
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    /// First maximizer of `theta` over `[0, x]`, ties toward the smaller point.
    pub fn constrained_argmax(&self, x: f64) -> f64 {
        if x >= self.grid_end() {
            return self.k_hat;
        }
        if x <= self.grid[0] {
            return x.max(0.0).min(self.grid[0]);
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let j = self.prefix_argmax[i];
        if self.eval(x) > self.values[j] {
            x
        } else {
            self.grid[j]
        }
    }

    pub(crate) fn require_stabilizable(&self, load: f64, max_rate: f64) -> Result<()> {
        if self.theta_hat > 0.0 {
            Ok(())
        } else {
            Err(Error::Unstabilizable { load, max_rate })
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "drift grid is empty"));
    }
    if grid[0] < 0.0 || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::param("grid", "drift grid must be finite and >= 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "drift grid must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `0, h, 2h, …` up to and including `x_max`.
pub fn uniform_grid(x_max: f64, step: f64) -> Vec<f64> {
    let n = (x_max / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| (i as f64 * step).min(x_max)).collect()
}

/// Grid used when none is supplied: from 0 to the last tabulated rate.
pub fn default_mu_grid(curve: &ServiceRateCurve) -> Vec<f64> {
    uniform_grid(curve.max_index().max(1) as f64, DRIFT_GRID_STEP)
}

pub fn drift_from_mu(curve: &ServiceRateCurve, input: &InputProcess, grid: &[f64]) -> Result<DriftFunction> {
    input.require_diffusion()?;
    check_grid(grid)?;
    let load = input.load();
    let mut sup_mu = 0.0f64;
    let values = grid
        .iter()
        .map(|&x| {
            let mu = curve.eval(x);
            sup_mu = sup_mu.max(mu);
            -load * (load / mu).ln()
        })
        .collect();
    let drift = DriftFunction::build(grid.to_vec(), values, DriftProvenance::FromMu, input.sigma2())?;
    drift.require_stabilizable(load, sup_mu.max(curve.max_rate()))?;
    Ok(drift)
}

/// Log of the interpolated headcount density of a birth–death law.
///
/// Knots sit at `(n + 1/2, log pi(n))`. Below `K` the monotone cubic is used;
/// from `K` on the log-density is linear with slope `log(lambda m / mu(K))`.
#[derive(Clone, Debug)]
pub struct LogDensity {
    interp: Pchip,
    k: f64,
    at_k: f64,
    tail_slope: f64,
}

impl LogDensity {
    pub fn from_pi(pi: &BirthDeathDistribution) -> Result<Self> {
        let k = pi.k();
        let last = (k + 1).min(pi.n_max());
        let p = pi.pi();
        if let Some(n) = (0..=last.min(k)).find(|&n| !(p[n] > 0.0)) {
            return Err(Error::Numerical(format!("zero stationary mass at n = {n}; log-density undefined")));
        }
        let mut xs: Vec<f64> = (0..=last).map(|n| n as f64 + 0.5).collect();
        let mut ys: Vec<f64> = (0..=last).map(|n| p[n].ln()).collect();
        let tail_slope = pi.tail_ratio().ln();
        if xs.len() < 2 {
            xs.push(1.5);
            ys.push(ys[0] + tail_slope);
        }
        let interp = Pchip::new(xs, ys)?;
        let kf = k as f64;
        Ok(Self {
            at_k: interp.eval(kf),
            interp,
            k: kf,
            tail_slope,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    #[inline]
    pub fn log_f(&self, x: f64) -> f64 {
        if x >= self.k {
            self.at_k + self.tail_slope * (x - self.k)
        } else {
            self.interp.eval(x)
        }
    }

    #[inline]
    pub fn dlog_f(&self, x: f64) -> f64 {
        if x >= self.k {
            self.tail_slope
        } else {
            self.interp.derivative(x)
        }
    }
}

/// Grid used by [`drift_from_pi`] when none is supplied: `[0, K + 1]`.
pub fn default_pi_grid(pi: &BirthDeathDistribution) -> Vec<f64> {
    uniform_grid(pi.k() as f64 + 1.0, DRIFT_GRID_STEP)
}

pub fn drift_from_pi(pi: &BirthDeathDistribution, input: &InputProcess, grid: &[f64]) -> Result<DriftFunction> {
    input.require_diffusion()?;
    check_grid(grid)?;
    let logf = LogDensity::from_pi(pi)?;
    let load = input.load();
    let values = grid.iter().map(|&x| -load * logf.dlog_f(x)).collect();
    let drift = DriftFunction::build(grid.to_vec(), values, DriftProvenance::FromPi, input.sigma2())?;
    drift.require_stabilizable(load, load / pi.tail_ratio())?;
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{birth_death_pi, Family, DEFAULT_TAIL_TOL};

    fn quad() -> ServiceRateCurve {
        ServiceRateCurve::quadratic(1.25, 150.0).unwrap()
    }

    #[test]
    fn flat_curve_at_critical_load_has_zero_drift() {
        let c = ServiceRateCurve::new(vec![1.0]).unwrap();
        let inp = InputProcess::markovian(1.0, 1.0).unwrap();
        let grid = uniform_grid(4.0, 0.25);
        let err = drift_from_mu(&c, &inp, &grid).unwrap_err();
        assert!(matches!(err, Error::Unstabilizable { .. }));
        let values: Vec<f64> = grid.iter().map(|&x| -(1.0 / c.eval(x)).ln()).collect();
        assert!(values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_curve_drift() {
        let inp = InputProcess::markovian(0.7, 1.0).unwrap();
        let d = drift_from_mu(&quad(), &inp, &default_mu_grid(&quad())).unwrap();
        let expect = 0.7 * (1.25f64 / 0.7).ln();
        assert!((expect - 0.40587).abs() < 1e-5);
        assert!((d.eval(0.0) - expect).abs() < 1e-12);
        assert!((d.eval(1e-9) - expect).abs() < 1e-9);
        let root = (150.0f64 * 0.55).sqrt();
        assert!((root - 9.0829).abs() < 1e-4);
        assert!(d.eval(root).abs() < 1e-6);
        assert_eq!(d.k_hat(), 0.0);
        assert_eq!(d.constrained_argmax(3.0), 0.0);
        assert_eq!(d.provenance(), DriftProvenance::FromMu);
    }

    #[test]
    fn exp_of_drift_recovers_rate_ratio() {
        let c = ServiceRateCurve::new(vec![1.0, 1.5, 1.25, 1.0, 0.75]).unwrap();
        let inp = InputProcess::poisson(0.9, Family::DegenerateHyperexponential, 1.0, 4.0).unwrap();
        let grid = default_mu_grid(&c);
        let d = drift_from_mu(&c, &inp, &grid).unwrap();
        for (&x, &t) in grid.iter().zip(d.values()) {
            let r = (-t / 0.9).exp();
            assert!((r - 0.9 / c.eval(x)).abs() < 1e-12);
        }
        assert_eq!(d.k_hat(), 2.0);
        assert!(d.values().iter().all(|&v| v <= d.theta_hat()));
        assert_eq!(d.constrained_argmax(1.3), 1.3);
        assert_eq!(d.constrained_argmax(0.5), 0.0);
        assert_eq!(d.constrained_argmax(7.0), 2.0);
    }

    #[test]
    fn pi_drift_mm1_constant() {
        let c = ServiceRateCurve::new(vec![1.0]).unwrap();
        let inp = InputProcess::markovian(0.5, 1.0).unwrap();
        let bd = birth_death_pi(&c, &inp, 1, DEFAULT_TAIL_TOL).unwrap();
        let d = drift_from_pi(&bd, &inp, &uniform_grid(6.0, 0.125)).unwrap();
        let expect = -0.5 * 0.5f64.ln();
        assert!((expect - 0.34657).abs() < 1e-5);
        for &v in d.values() {
            assert!((v - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn pi_drift_tail_slope() {
        let c = ServiceRateCurve::new(vec![1.0, 1.5, 1.25, 1.0, 0.75]).unwrap();
        let inp = InputProcess::markovian(0.9, 1.0).unwrap();
        let bd = birth_death_pi(&c, &inp, 2, DEFAULT_TAIL_TOL).unwrap();
        let d = drift_from_pi(&bd, &inp, &default_pi_grid(&bd)).unwrap();
        let expect = -0.9 * (0.9f64 / 1.5).ln();
        // 0.459743 to six places
        assert!((expect - 0.45973).abs() < 2e-5);
        for x in [2.0, 2.5, 3.0, 10.0] {
            assert!((d.eval(x) - expect).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn uniform_mass_gives_flat_drift() {
        let grid = uniform_grid(3.0, 0.5);
        let interp = Pchip::new(vec![0.5, 1.5, 2.5, 3.5], vec![(0.25f64).ln(); 4]).unwrap();
        assert!(grid.iter().all(|&x| interp.derivative(x).abs() < 1e-15 || x <= 0.5));
    }

    #[test]
    fn uniform_grid_ends_exactly() {
        let g = uniform_grid(13.0, DRIFT_GRID_STEP);
        assert_eq!(*g.last().unwrap(), 13.0);
        assert_eq!(g.len(), 13 * 64 + 1);
    }
}
