//! Interarrival and job-size distributions parameterized by mean and SCV.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution as _, Exp, Gamma, LogNormal, Pareto, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Deterministic,
    Exponential,
    Erlang,
    /// Two-phase hyperexponential with balanced means.
    Hyperexponential,
    /// Point mass at zero mixed with an exponential (`H*`).
    #[serde(alias = "h-star")]
    DegenerateHyperexponential,
    Weibull,
    Lognormal,
    /// Shifted (Lomax) Pareto with finite variance.
    Pareto,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Deterministic,
        Family::Exponential,
        Family::Erlang,
        Family::Hyperexponential,
        Family::DegenerateHyperexponential,
        Family::Weibull,
        Family::Lognormal,
        Family::Pareto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Deterministic => "deterministic",
            Family::Exponential => "exponential",
            Family::Erlang => "erlang",
            Family::Hyperexponential => "hyperexponential",
            Family::DegenerateHyperexponential => "degenerate-hyperexponential",
            Family::Weibull => "weibull",
            Family::Lognormal => "lognormal",
            Family::Pareto => "pareto",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .or((s == "h-star" || s == "hstar").then_some(Family::DegenerateHyperexponential))
            .ok_or_else(|| Error::param("family", format!("unknown distribution family `{s}`")))
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Deterministic(f64),
    Exponential(Exp<f64>, f64),
    Erlang { k: u32, mean: f64, sampler: Gamma<f64> },
    Hyper2 { p1: f64, mean1: f64, mean2: f64, exp1: Exp<f64>, exp2: Exp<f64> },
    HStar { p: f64, mean: f64, exp: Exp<f64> },
    Weibull { shape: f64, scale: f64, sampler: Weibull<f64> },
    Lognormal { mu: f64, sigma: f64, sampler: LogNormal<f64> },
    Lomax { shape: f64, scale: f64, sampler: Pareto<f64> },
}

/// A positive random variable with a declared mean and squared coefficient of variation.
#[derive(Clone, Debug)]
pub struct Distribution {
    family: Family,
    shape: Shape,
}

impl Distribution {
    pub fn from_moments(family: Family, mean: f64, scv: f64) -> Result<Self> {
        let unreachable = |reason: &str| Error::Parameterization {
            family: family.name(),
            mean,
            scv,
            reason: reason.to_string(),
        };
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(unreachable("mean must be finite and > 0"));
        }
        if !(scv >= 0.0 && scv.is_finite()) {
            return Err(unreachable("SCV must be finite and >= 0"));
        }
        let shape = match family {
            Family::Deterministic => {
                if scv != 0.0 {
                    return Err(unreachable("deterministic SCV is 0"));
                }
                Shape::Deterministic(mean)
            }
            Family::Exponential => {
                if (scv - 1.0).abs() > 1e-12 {
                    return Err(unreachable("exponential SCV is 1"));
                }
                Shape::Exponential(exp_with_mean(mean), mean)
            }
            Family::Erlang => {
                let k = (1.0 / scv).round();
                if scv == 0.0 || !(k >= 1.0) || (k * scv - 1.0).abs() > 1e-9 {
                    return Err(unreachable("Erlang SCV must be 1/k for a positive integer k"));
                }
                let k = k as u32;
                let sampler = Gamma::new(f64::from(k), mean / f64::from(k))
                    .map_err(|e| unreachable(&e.to_string()))?;
                Shape::Erlang { k, mean, sampler }
            }
            Family::Hyperexponential => {
                if scv < 1.0 {
                    return Err(unreachable("hyperexponential SCV must be >= 1"));
                }
                let p1 = 0.5 * (1.0 + ((scv - 1.0) / (scv + 1.0)).sqrt());
                let mean1 = mean / (2.0 * p1);
                let mean2 = mean / (2.0 * (1.0 - p1));
                Shape::Hyper2 {
                    p1,
                    mean1,
                    mean2,
                    exp1: exp_with_mean(mean1),
                    exp2: exp_with_mean(mean2),
                }
            }
            Family::DegenerateHyperexponential => {
                if scv < 1.0 {
                    return Err(unreachable("H* SCV must be >= 1"));
                }
                let p = 2.0 / (1.0 + scv);
                Shape::HStar {
                    p,
                    mean,
                    exp: exp_with_mean(mean / p),
                }
            }
            Family::Weibull => {
                if scv == 0.0 {
                    return Err(unreachable("Weibull SCV must be > 0"));
                }
                let shape = weibull_shape_for_scv(scv).ok_or_else(|| unreachable("SCV outside [1e-8, 1e50]"))?;
                let scale = mean / ln_gamma(1.0 + 1.0 / shape).exp();
                let sampler = Weibull::new(scale, shape).map_err(|e| unreachable(&e.to_string()))?;
                Shape::Weibull { shape, scale, sampler }
            }
            Family::Lognormal => {
                if scv == 0.0 {
                    return Err(unreachable("lognormal SCV must be > 0"));
                }
                let sigma = scv.ln_1p().sqrt();
                let mu = mean.ln() - 0.5 * sigma * sigma;
                let sampler = LogNormal::new(mu, sigma).map_err(|e| unreachable(&e.to_string()))?;
                Shape::Lognormal { mu, sigma, sampler }
            }
            Family::Pareto => {
                if scv <= 1.0 {
                    return Err(unreachable("finite-variance shifted Pareto needs SCV > 1"));
                }
                let shape = 2.0 * scv / (scv - 1.0);
                let scale = mean * (shape - 1.0);
                let sampler = Pareto::new(scale, shape).map_err(|e| unreachable(&e.to_string()))?;
                Shape::Lomax { shape, scale, sampler }
            }
        };
        Ok(Self { family, shape })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        match &self.shape {
            Shape::Deterministic(v) => *v,
            Shape::Exponential(_, m) => *m,
            Shape::Erlang { mean, .. } => *mean,
            Shape::Hyper2 { p1, mean1, mean2, .. } => p1 * mean1 + (1.0 - p1) * mean2,
            Shape::HStar { mean, .. } => *mean,
            Shape::Weibull { shape, scale, .. } => scale * ln_gamma(1.0 + 1.0 / shape).exp(),
            Shape::Lognormal { mu, sigma, .. } => (mu + 0.5 * sigma * sigma).exp(),
            Shape::Lomax { shape, scale, .. } => scale / (shape - 1.0),
        }
    }

    /// Squared coefficient of variation recomputed from the stored parameters.
    pub fn scv(&self) -> f64 {
        match &self.shape {
            Shape::Deterministic(_) => 0.0,
            Shape::Exponential(..) => 1.0,
            Shape::Erlang { k, .. } => 1.0 / f64::from(*k),
            Shape::Hyper2 { p1, mean1, mean2, .. } => {
                let m = self.mean();
                let second = 2.0 * (p1 * mean1 * mean1 + (1.0 - p1) * mean2 * mean2);
                second / (m * m) - 1.0
            }
            Shape::HStar { p, .. } => 2.0 / p - 1.0,
            Shape::Weibull { shape, .. } => weibull_scv(*shape),
            Shape::Lognormal { sigma, .. } => (sigma * sigma).exp_m1(),
            Shape::Lomax { shape, .. } => shape / (shape - 2.0),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.shape {
            Shape::Deterministic(v) => *v,
            Shape::Exponential(e, _) => e.sample(rng),
            Shape::Erlang { sampler, .. } => sampler.sample(rng),
            Shape::Hyper2 { p1, exp1, exp2, .. } => {
                if rng.random::<f64>() < *p1 {
                    exp1.sample(rng)
                } else {
                    exp2.sample(rng)
                }
            }
            Shape::HStar { p, exp, .. } => {
                if rng.random::<f64>() < *p {
                    exp.sample(rng)
                } else {
                    0.0
                }
            }
            Shape::Weibull { sampler, .. } => sampler.sample(rng),
            Shape::Lognormal { sampler, .. } => sampler.sample(rng),
            Shape::Lomax { scale, sampler, .. } => sampler.sample(rng) - scale,
        }
    }
}

fn exp_with_mean(mean: f64) -> Exp<f64> {
    Exp::new(1.0 / mean).expect("positive finite mean")
}

fn weibull_scv(shape: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 / shape) - 2.0 * ln_gamma(1.0 + 1.0 / shape)).exp_m1()
}

fn weibull_shape_for_scv(scv: f64) -> Option<f64> {
    // scv is strictly decreasing in the shape parameter
    let (mut lo, mut hi) = (0.02f64.ln(), 1.0e4f64.ln());
    if scv > weibull_scv(lo.exp()) || scv < weibull_scv(hi.exp()) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if weibull_scv(mid.exp()) > scv {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical(d: &Distribution, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = d.sample(&mut rng);
            assert!(x >= 0.0);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        (mean, var / (mean * mean))
    }

    #[test]
    fn deterministic_draws_are_constant() {
        let d = Distribution::from_moments(Family::Deterministic, 2.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| d.sample(&mut rng) == 2.0));
    }

    #[test]
    fn hstar_moments() {
        let d = Distribution::from_moments(Family::DegenerateHyperexponential, 1.0, 19.0).unwrap();
        match d.shape {
            Shape::HStar { p, .. } => assert!((p - 0.1).abs() < 1e-15),
            _ => unreachable!(),
        }
        let (mean, scv) = empirical(&d, 1_000_000, 7);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((scv - 19.0).abs() < 0.05 * 19.0, "scv {scv}");
    }

    #[test]
    fn exponential_moments() {
        let d = Distribution::from_moments(Family::Exponential, 1.0, 1.0).unwrap();
        let (mean, scv) = empirical(&d, 400_000, 3);
        assert!((mean - 1.0).abs() < 0.01);
        assert!((scv - 1.0).abs() < 0.03);
    }

    #[test]
    fn every_family_matches_declared_moments_empirically() {
        let cases = [
            (Family::Erlang, 0.25),
            (Family::Hyperexponential, 4.0),
            (Family::Weibull, 2.5),
            (Family::Lognormal, 1.5),
            (Family::Pareto, 3.0),
        ];
        for (fam, scv) in cases {
            let d = Distribution::from_moments(fam, 1.5, scv).unwrap();
            let (mean, _) = empirical(&d, 400_000, 11);
            assert!((mean / 1.5 - 1.0).abs() < 0.02, "{fam}: mean {mean}");
        }
    }

    #[test]
    fn unreachable_moments_are_rejected() {
        assert!(Distribution::from_moments(Family::Erlang, 1.0, 2.0).is_err());
        assert!(Distribution::from_moments(Family::Erlang, 1.0, 0.3).is_err());
        assert!(Distribution::from_moments(Family::Exponential, 1.0, 2.0).is_err());
        assert!(Distribution::from_moments(Family::Hyperexponential, 1.0, 0.5).is_err());
        assert!(Distribution::from_moments(Family::DegenerateHyperexponential, 1.0, 0.5).is_err());
        assert!(Distribution::from_moments(Family::Pareto, 1.0, 1.0).is_err());
        assert!(Distribution::from_moments(Family::Deterministic, 1.0, 0.1).is_err());
        assert!(Distribution::from_moments(Family::Lognormal, -1.0, 1.0).is_err());
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("h-star".parse::<Family>().unwrap(), Family::DegenerateHyperexponential);
        assert!("gamma-ish".parse::<Family>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn family_and_scv() -> impl Strategy<Value = (Family, f64)> {
            prop_oneof![
                Just((Family::Deterministic, 0.0)),
                Just((Family::Exponential, 1.0)),
                (1u32..40).prop_map(|k| (Family::Erlang, 1.0 / f64::from(k))),
                (1.0f64..50.0).prop_map(|c| (Family::Hyperexponential, c)),
                (1.0f64..50.0).prop_map(|c| (Family::DegenerateHyperexponential, c)),
                (0.01f64..50.0).prop_map(|c| (Family::Weibull, c)),
                (0.01f64..50.0).prop_map(|c| (Family::Lognormal, c)),
                (1.01f64..50.0).prop_map(|c| (Family::Pareto, c)),
            ]
        }

        proptest! {
            #[test]
            fn moments_round_trip((family, scv) in family_and_scv(), mean in 0.01f64..100.0) {
                let d = Distribution::from_moments(family, mean, scv).unwrap();
                prop_assert!((d.mean() / mean - 1.0).abs() <= 1e-12);
                prop_assert!((d.scv() - scv).abs() <= 1e-12 * scv.max(1.0));
            }
        }
    }
}
