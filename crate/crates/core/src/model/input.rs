use serde::{Deserialize, Serialize};

use super::dist::{Distribution, Family};
use crate::error::{Error, Result};

/// Renewal arrival stream and i.i.d. job sizes.
///
/// An arrival rate of zero is accepted so that an idle system can be
/// simulated; every analytic routine rejects it.
#[derive(Clone, Debug)]
pub struct InputProcess {
    lambda: f64,
    interarrival: Option<Distribution>,
    ca2: f64,
    jobsize: Distribution,
}

impl InputProcess {
    pub fn new(lambda: f64, interarrival: Family, ca2: f64, jobsize: Family, m: f64, cs2: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        let interarrival = if lambda > 0.0 {
            Some(Distribution::from_moments(interarrival, 1.0 / lambda, ca2)?)
        } else {
            if !(ca2 >= 0.0 && ca2.is_finite()) {
                return Err(Error::param("ca2", format!("must be finite and >= 0, got {ca2}")));
            }
            None
        };
        Ok(Self {
            lambda,
            interarrival,
            ca2,
            jobsize: Distribution::from_moments(jobsize, m, cs2)?,
        })
    }

    /// Poisson arrivals with the given job-size law.
    pub fn poisson(lambda: f64, jobsize: Family, m: f64, cs2: f64) -> Result<Self> {
        Self::new(lambda, Family::Exponential, 1.0, jobsize, m, cs2)
    }

    /// Poisson arrivals and exponential sizes.
    pub fn markovian(lambda: f64, m: f64) -> Result<Self> {
        Self::poisson(lambda, Family::Exponential, m, 1.0)
    }

    pub fn from_spec(spec: &InputSpec) -> Result<Self> {
        Self::new(spec.lambda, spec.interarrival, spec.ca2, spec.jobsize, spec.m, spec.cs2)
    }

    pub fn spec(&self) -> InputSpec {
        InputSpec {
            lambda: self.lambda,
            m: self.m(),
            ca2: self.ca2,
            cs2: self.cs2(),
            interarrival: self.interarrival.as_ref().map_or(Family::Exponential, Distribution::family),
            jobsize: self.jobsize.family(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn m(&self) -> f64 {
        self.jobsize.mean()
    }

    pub fn ca2(&self) -> f64 {
        self.ca2
    }

    pub fn cs2(&self) -> f64 {
        self.jobsize.scv()
    }

    /// Mean of the equilibrium job-size law, `(1 + c_s^2) m / 2`.
    pub fn m_e(&self) -> f64 {
        0.5 * (1.0 + self.cs2()) * self.m()
    }

    /// Diffusion variance `lambda m^2 (c_a^2 + c_s^2)`.
    pub fn sigma2(&self) -> f64 {
        let m = self.m();
        self.lambda * m * m * (self.ca2 + self.cs2())
    }

    /// Offered load `lambda m` in work units per time unit.
    pub fn load(&self) -> f64 {
        self.lambda * self.m()
    }

    pub fn interarrival(&self) -> Option<&Distribution> {
        self.interarrival.as_ref()
    }

    pub fn jobsize(&self) -> &Distribution {
        &self.jobsize
    }

    pub(crate) fn require_arrivals(&self) -> Result<()> {
        if self.lambda > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain("analytic approximations need lambda > 0".into()))
        }
    }

    pub(crate) fn require_diffusion(&self) -> Result<()> {
        self.require_arrivals()?;
        if self.sigma2() > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain("diffusion variance is zero (deterministic arrivals and sizes)".into()))
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_exponential() -> Family {
    Family::Exponential
}

/// Serialized form of an [`InputProcess`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub lambda: f64,
    #[serde(default = "default_one")]
    pub m: f64,
    #[serde(default = "default_one")]
    pub ca2: f64,
    #[serde(default = "default_one")]
    pub cs2: f64,
    #[serde(default = "default_exponential")]
    pub interarrival: Family,
    #[serde(default = "default_exponential")]
    pub jobsize: Family,
}
