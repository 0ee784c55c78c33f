use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pchip::Pchip;

/// How the discrete rates are extended to a continuous curve.
#[derive(Clone, Debug)]
enum Extension {
    Constant,
    MonotoneCubic(Pchip),
    /// `a - x^2 / b`, the closed form the rates were sampled from.
    Quadratic { a: f64, b: f64 },
}

/// Service rate `mu(i)` of the processor-sharing server when `i` jobs share it,
/// together with its continuous extension `mu_hat(x)`.
///
/// `mu_hat` agrees with `mu` at every integer, is constant at `mu(1)` on `(0, 1)`
/// and constant at `mu(I_max)` beyond the last tabulated rate.
#[derive(Clone, Debug)]
pub struct ServiceRateCurve {
    rates: Vec<f64>,
    extension: Extension,
}

impl ServiceRateCurve {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        validate_rates(&rates)?;
        let extension = if rates.len() == 1 {
            Extension::Constant
        } else {
            let knots = (1..=rates.len()).map(|i| i as f64).collect();
            Extension::MonotoneCubic(Pchip::new(knots, rates.clone())?)
        };
        Ok(Self { rates, extension })
    }

    /// Rates `mu(i) = a - i^2 / b` for every `i >= 1` where the value is positive.
    /// The continuous extension is the quadratic itself on `(0, I_max]`.
    pub fn quadratic(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("must be finite and > 0, got {a}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::param("b", format!("must be finite and > 0, got {b}")));
        }
        let rates: Vec<f64> = (1..)
            .map(|i: u32| a - f64::from(i * i) / b)
            .take_while(|&r| r > 0.0)
            .collect();
        if rates.is_empty() {
            return Err(Error::param("a", "quadratic curve has no positive rate at i = 1"));
        }
        Ok(Self {
            rates,
            extension: Extension::Quadratic { a, b },
        })
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        match spec {
            CurveSpec::Rates { rates } => Self::new(rates.clone()),
            CurveSpec::Quadratic { a, b } => Self::quadratic(*a, *b),
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Number of tabulated rates, `I_max`.
    pub fn max_index(&self) -> usize {
        self.rates.len()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `mu(i)` for `i >= 1`; constant at `mu(I_max)` past the table. `mu(0) = 0`.
    #[inline]
    pub fn rate(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.rates[i.min(self.rates.len()) - 1]
        }
    }

    /// Continuous extension `mu_hat(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> f64 {
        let imax = self.rates.len() as f64;
        if x <= 1.0 && !matches!(self.extension, Extension::Quadratic { .. }) {
            return self.rates[0];
        }
        if x >= imax {
            return self.rates[self.rates.len() - 1];
        }
        match &self.extension {
            Extension::Constant => self.rates[0],
            Extension::MonotoneCubic(p) => p.eval(x),
            Extension::Quadratic { a, b } => a - x * x / b,
        }
    }

    pub fn spec(&self) -> CurveSpec {
        match self.extension {
            Extension::Quadratic { a, b } => CurveSpec::Quadratic { a, b },
            _ => CurveSpec::Rates {
                rates: self.rates.clone(),
            },
        }
    }
}

fn validate_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::param("rates", "service curve needs at least one rate"));
    }
    for (i, &r) in rates.iter().enumerate() {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NonPositiveRate {
                index: i + 1,
                value: r,
            });
        }
    }
    Ok(())
}

/// Serialized form of a service curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CurveSpec {
    Rates { rates: Vec<f64> },
    Quadratic { a: f64, b: f64 },
}
