use super::curve::ServiceRateCurve;
use super::input::InputProcess;
use crate::error::{Error, Result};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Stationary headcount law of the static-`K` queue under Poisson arrivals and
/// exponential sizes, truncated where the geometric tail drops below a tolerance.
#[derive(Clone, Debug)]
pub struct BirthDeathDistribution {
    pi: Vec<f64>,
    k: usize,
    truncation_mass: f64,
    tail_ratio: f64,
}

impl BirthDeathDistribution {
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Largest retained headcount.
    pub fn n_max(&self) -> usize {
        self.pi.len() - 1
    }

    /// Mass dropped beyond `n_max`, as a fraction of the untruncated total.
    pub fn truncation_mass(&self) -> f64 {
        self.truncation_mass
    }

    /// `lambda m / mu(K)`, the constant ratio `pi(n+1)/pi(n)` for `n >= K - 1`.
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    pub fn mean(&self) -> f64 {
        self.pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

pub fn birth_death_pi(
    curve: &ServiceRateCurve,
    input: &InputProcess,
    k: usize,
    tail_tol: f64,
) -> Result<BirthDeathDistribution> {
    input.require_arrivals()?;
    if k == 0 {
        return Err(Error::param("K", "concurrency level must be >= 1"));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::param("tail_tol", format!("must lie in (0, 1), got {tail_tol}")));
    }
    let load = input.load();
    let mu_k = curve.rate(k);
    if load >= mu_k {
        return Err(Error::Unstable { load, rate: mu_k, k });
    }
    let r = load / mu_k;

    let mut q = vec![1.0f64];
    let mut total = 1.0;
    loop {
        let n = q.len() - 1;
        // tail beyond n is bounded by q(n) r / (1 - r) once the ratio is constant
        if n + 1 >= k {
            let tail = q[n] * r / (1.0 - r);
            if tail <= tail_tol * total {
                let truncation_mass = tail / (total + tail);
                let pi = q.into_iter().map(|v| v / total).collect();
                return Ok(BirthDeathDistribution {
                    pi,
                    k,
                    truncation_mass,
                    tail_ratio: r,
                });
            }
        }
        let next = q[n] * load / curve.rate((n + 1).min(k));
        total += next;
        q.push(next);
    }
}
