use log::warn;

use crate::error::{Error, Result};

/// Relative mass beyond the truncation point that is rejected outright.
pub const TAIL_ERROR: f64 = 1e-3;
/// Relative mass beyond the truncation point that triggers a warning.
pub const TAIL_WARN: f64 = 1e-9;
pub const DEFAULT_POINTS: usize = 4096;

/// Grid-tabulated stationary law on `[0, W_max]`.
#[derive(Clone, Debug)]
pub struct StationaryLaw {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    normalizer: f64,
    tail_mass: f64,
}

impl StationaryLaw {
    /// Builds the law from unnormalized density values by cumulative trapezoid.
    /// `decay` is the local exponential decay rate at the right end, used to
    /// estimate the mass cut off by truncation.
    pub(crate) fn from_density(grid: Vec<f64>, density: Vec<f64>, decay: f64) -> Result<Self> {
        let n = grid.len();
        debug_assert_eq!(density.len(), n);
        let w_max = grid[n - 1];
        if density.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Truncation {
                w_max,
                reason: "density overflowed; the drift does not confine the diffusion on this range".into(),
            });
        }
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 1..n {
            acc += 0.5 * (grid[i] - grid[i - 1]) * (density[i] + density[i - 1]);
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Numerical(format!("density integrates to {acc} on [0, {w_max}]")));
        }
        if !(decay > 0.0) {
            return Err(Error::Truncation {
                w_max,
                reason: format!("density is not decaying at the right end (rate {decay}); increase W_max"),
            });
        }
        let tail_mass = density[n - 1] / decay / (acc + density[n - 1] / decay);
        if tail_mass > TAIL_ERROR {
            return Err(Error::Truncation {
                w_max,
                reason: format!("estimated mass {tail_mass:.3e} beyond the grid; increase W_max"),
            });
        }
        if tail_mass > TAIL_WARN {
            warn!("stationary law truncated at {w_max}: estimated tail mass {tail_mass:.3e}");
        }
        let inv = 1.0 / acc;
        cdf.iter_mut().for_each(|c| *c *= inv);
        cdf[n - 1] = 1.0;
        let pdf = density.into_iter().map(|p| p * inv).collect();
        Ok(Self {
            grid,
            cdf,
            pdf,
            normalizer: inv,
            tail_mass,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn pdf(&self) -> &[f64] {
        &self.pdf
    }

    /// Constant that turns the unnormalized density into a probability density.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn w_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Estimated relative mass beyond `W_max` before renormalization.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    fn locate(&self, x: f64) -> usize {
        self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1) - 1
    }

    /// CDF at an arbitrary point: cubic Hermite between knots using the density
    /// as slope, clamped to `[0, 1]` and to the neighbouring knot values.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.w_max() {
            return 1.0;
        }
        let i = self.locate(x);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * self.cdf[i]
            + (s3 - 2.0 * s2 + s) * h * self.pdf[i]
            + (-2.0 * s3 + 3.0 * s2) * self.cdf[i + 1]
            + (s3 - s2) * h * self.pdf[i + 1];
        v.clamp(self.cdf[i], self.cdf[i + 1])
    }

    pub fn pdf_at(&self, x: f64) -> f64 {
        if x < self.grid[0] || x > self.w_max() {
            return 0.0;
        }
        let i = self.locate(x);
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.pdf[i] + t * (self.pdf[i + 1] - self.pdf[i])
    }

    /// `∫ (1 − F)` over the grid by trapezoid.
    pub fn mean(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.cdf.windows(2))
            .map(|(g, c)| 0.5 * (g[1] - g[0]) * (2.0 - c[0] - c[1]))
            .sum()
    }

    /// Rows `(x, cdf, pdf)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.cdf)
            .zip(&self.pdf)
            .map(|((&x, &c), &p)| (x, c, p))
    }

    pub(crate) fn with_grid(&self, grid: Vec<f64>, pdf: Vec<f64>) -> Self {
        Self {
            grid,
            cdf: self.cdf.clone(),
            pdf,
            normalizer: self.normalizer,
            tail_mass: self.tail_mass,
        }
    }
}

/// Uniform grid of `points` nodes on `[0, w_max]` with every `knot` in
/// `(0, w_max)` inserted.
pub fn workload_grid(w_max: f64, points: usize, knots: &[f64]) -> Result<Vec<f64>> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::param("W_max", format!("must be finite and > 0, got {w_max}")));
    }
    if points < 2 {
        return Err(Error::param("points", "grid needs at least 2 points"));
    }
    let h = w_max / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| i as f64 * h).collect();
    grid[points - 1] = w_max;
    for &k in knots {
        if k > 0.0 && k < w_max {
            let i = grid.partition_point(|&g| g < k);
            if (grid[i] - k).abs() > 1e-9 * h {
                grid.insert(i, k);
            } else {
                grid[i] = k;
            }
        }
    }
    Ok(grid)
}

/// Stationary law of a reflected diffusion on `[0, ∞)` with drift `−beta(w)` and
/// variance `s(w)`, truncated to the supplied grid:
/// density `∝ exp(−∫₀ʷ 2 beta / s) / s(w)`.
pub fn rbm_stationary(beta: impl Fn(f64) -> f64, s: impl Fn(f64) -> f64, grid: &[f64]) -> Result<StationaryLaw> {
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "need a strictly increasing grid starting at 0"));
    }
    let n = grid.len();
    let mut rate = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for &w in grid {
        let sv = s(w);
        if !(sv > 0.0 && sv.is_finite()) {
            return Err(Error::Domain(format!("variance must be > 0, got {sv} at w = {w}")));
        }
        let b = beta(w);
        if !b.is_finite() {
            return Err(Error::Domain(format!("drift is not finite at w = {w}")));
        }
        rate.push(2.0 * b / sv);
        var.push(sv);
    }
    let mut exponent = 0.0;
    let mut density = Vec::with_capacity(n);
    density.push(1.0 / var[0]);
    for i in 1..n {
        exponent += 0.5 * (grid[i] - grid[i - 1]) * (rate[i] + rate[i - 1]);
        density.push((-exponent).exp() / var[i]);
    }
    StationaryLaw::from_density(grid.to_vec(), density, rate[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    #[test]
    fn constant_coefficients_give_exponential() {
        let grid = workload_grid(100.0, DEFAULT_POINTS, &[]).unwrap();
        let law = rbm_stationary(|_| 0.25, |_| 2.0, &grid).unwrap();
        let sup = law
            .rows()
            .map(|(w, c, _)| (c - (1.0 - (-0.25 * w).exp())).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-8, "sup {sup}");
        assert!((law.cdf_at(4.0) - 0.63212).abs() < 1e-5);
        assert_eq!(*law.cdf().last().unwrap(), 1.0);
        assert_eq!(law.cdf()[0], 0.0);
    }

    #[test]
    fn linear_drift_gives_half_normal() {
        let grid = workload_grid(6.0, DEFAULT_POINTS, &[1.0]).unwrap();
        let law = rbm_stationary(|w| w, |_| 1.0, &grid).unwrap();
        assert!((law.cdf_at(1.0) - erf(1.0)).abs() < 1e-6);
        assert!((erf(1.0) - 0.84270).abs() < 1e-5);
        let sup = law.rows().map(|(w, c, _)| (c - erf(w)).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-6, "sup {sup}");
    }

    #[test]
    fn short_range_is_a_truncation_error() {
        let grid = workload_grid(2.0, 200, &[]).unwrap();
        let err = rbm_stationary(|_| 0.25, |_| 2.0, &grid).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        let err = rbm_stationary(|_| -0.1, |_| 2.0, &grid).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn monotone_bounded_and_consistent() {
        let grid = workload_grid(40.0, 1000, &[3.3]).unwrap();
        assert!(grid.contains(&3.3));
        let law = rbm_stationary(|w| 0.2 + 0.1 * (w * 0.7).sin(), |w| 1.0 + 0.5 / (1.0 + w), &grid).unwrap();
        assert!(law.cdf().windows(2).all(|c| c[1] >= c[0]));
        assert!(law.pdf().iter().all(|&p| p >= 0.0));
        assert!(law.cdf().iter().all(|&c| (0.0..=1.0).contains(&c)));
        let mut prev = 0.0;
        for i in 0..=4000 {
            let c = law.cdf_at(i as f64 * 0.01);
            assert!(c >= prev);
            prev = c;
        }
    }
}
