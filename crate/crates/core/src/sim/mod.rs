//! Discrete-event simulation with batch-means confidence intervals.

mod engine;

pub use engine::{AdmissionStats, Event, Simulator, SystemState, TIE_TOL};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{InputProcess, ServiceRateCurve};
use crate::policy::ControlPolicy;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Total number of events, warmup included.
    pub events: u64,
    pub warmup_fraction: f64,
    pub batches: usize,
    pub seed: u64,
    /// When set, the headcount is recorded at this fixed time spacing after warmup.
    pub sample_spacing: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            events: 1_000_000,
            warmup_fraction: 0.2,
            batches: 32,
            seed: 1,
            sample_spacing: None,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::param("warmup_fraction", "must lie in [0, 1)"));
        }
        if self.batches < 2 {
            return Err(Error::param("batches", "need at least 2 batches"));
        }
        if let Some(s) = self.sample_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("sample_spacing", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub policy: String,
    pub e_n: f64,
    pub e_w: f64,
    /// 95% batch-means half-width for `e_n`.
    pub ci_n: f64,
    pub ci_w: f64,
    pub events: u64,
    pub seed: u64,
    /// Simulated time after warmup.
    pub duration: f64,
    /// Static level with load at or above its service rate.
    pub unstable: bool,
    pub admissions_max_arrival: usize,
    pub admissions_max_departure: usize,
    pub zero_target_guards: u64,
    /// Counts of the headcount at the sampling instants, indexed by headcount.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub headcount_samples: Vec<u64>,
}

#[derive(Clone, Copy, Default)]
struct Acc {
    time: f64,
    x: f64,
    w: f64,
}

pub fn simulate(
    curve: &ServiceRateCurve,
    input: &InputProcess,
    policy: &ControlPolicy,
    opts: &SimOptions,
) -> Result<SimResult> {
    opts.validate()?;
    let unstable = match policy {
        ControlPolicy::Static(0) => return Err(Error::param("K", "concurrency level must be >= 1")),
        ControlPolicy::Static(k) => {
            let bad = input.lambda() > 0.0 && input.load() >= curve.rate(*k);
            if bad {
                warn!("static K={k} is unstable: load {} >= mu(K) = {}", input.load(), curve.rate(*k));
            }
            bad
        }
        ControlPolicy::Dynamic(_) => false,
    };

    let mut sim = Simulator::new(curve, input, policy, opts.seed);
    let warmup = (opts.warmup_fraction * opts.events as f64).floor() as u64;
    let measured = opts.events - warmup;
    let batch_len = (measured / opts.batches as u64).max(1);

    let mut batches = vec![Acc::default(); opts.batches];
    let mut total = Acc::default();
    let mut samples: Vec<u64> = Vec::new();
    let mut next_sample = f64::INFINITY;
    let mut events = 0u64;

    while events < opts.events {
        let Some((dt, _, rate)) = sim.peek() else { break };
        if events >= warmup {
            let x = sim.headcount() as f64;
            let w = sim.workload();
            let b = (((events - warmup) / batch_len) as usize).min(opts.batches - 1);
            let wi = w * dt - 0.5 * rate * dt * dt;
            let acc = &mut batches[b];
            acc.time += dt;
            acc.x += x * dt;
            acc.w += wi;
            total.time += dt;
            total.x += x * dt;
            total.w += wi;
            if let Some(spacing) = opts.sample_spacing {
                if next_sample.is_infinite() {
                    next_sample = sim.clock() + spacing;
                }
                let end = sim.clock() + dt;
                while next_sample <= end {
                    let n = sim.headcount();
                    if samples.len() <= n {
                        samples.resize(n + 1, 0);
                    }
                    samples[n] += 1;
                    next_sample += spacing;
                }
            }
        }
        sim.step();
        events += 1;
    }

    let adm = sim.admissions();
    let (e_n, e_w, ci_n, ci_w) = if total.time > 0.0 {
        let e_n = total.x / total.time;
        let e_w = total.w / total.time;
        let used: Vec<&Acc> = batches.iter().filter(|b| b.time > 0.0).collect();
        let ci_n = half_width(used.iter().map(|b| b.x / b.time));
        let ci_w = half_width(used.iter().map(|b| b.w / b.time));
        (e_n, e_w, ci_n, ci_w)
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };
    Ok(SimResult {
        policy: policy.label(),
        e_n,
        e_w,
        ci_n,
        ci_w,
        events,
        seed: opts.seed,
        duration: total.time,
        unstable,
        admissions_max_arrival: adm.max_on_arrival,
        admissions_max_departure: adm.max_on_departure,
        zero_target_guards: adm.zero_target_guards,
        headcount_samples: samples,
    })
}

fn half_width(means: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = means.collect();
    let b = v.len();
    if b < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / b as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (b - 1) as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(1.96);
    t * (var / b as f64).sqrt()
}

/// Pearson goodness-of-fit of sampled headcounts against a headcount law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Compares `counts[n]` (observations of headcount `n`) with `pi`. Cells are
/// taken in order and the upper tail is pooled once an expected count would
/// fall below `min_expected`.
pub fn headcount_chi_square(counts: &[u64], pi: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::param("counts", "no samples"));
    }
    let n = total as f64;
    let p_at = |i: usize| pi.get(i).copied().unwrap_or(0.0);
    let c_at = |i: usize| counts.get(i).copied().unwrap_or(0) as f64;
    let mut cells = Vec::new();
    let mut i = 0;
    let mut used = 0.0;
    let mut seen = 0.0;
    while n * (1.0 - used - p_at(i)) >= min_expected && n * p_at(i) >= min_expected {
        cells.push((c_at(i), n * p_at(i)));
        used += p_at(i);
        seen += c_at(i);
        i += 1;
    }
    cells.push((n - seen, n * (1.0 - used).max(0.0)));
    if cells.len() < 2 {
        return Err(Error::param("pi", "too few cells with enough expected mass"));
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sf(statistic);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

/// Simulates every static level with the same seed (common random numbers).
pub fn sweep_static_k(
    curve: &ServiceRateCurve,
    input: &InputProcess,
    ks: &[usize],
    opts: &SimOptions,
) -> Result<Vec<(usize, SimResult)>> {
    ks.par_iter()
        .map(|&k| simulate(curve, input, &ControlPolicy::Static(k), opts).map(|r| (k, r)))
        .collect()
}

/// Independent replications with seeds `seed, seed+1, …`, merged by pooling
/// time integrals (order-independent).
pub fn replicate(
    curve: &ServiceRateCurve,
    input: &InputProcess,
    policy: &ControlPolicy,
    opts: &SimOptions,
    replications: usize,
) -> Result<Vec<SimResult>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let o = SimOptions {
                seed: opts.seed.wrapping_add(r),
                ..opts.clone()
            };
            simulate(curve, input, policy, &o)
        })
        .collect()
}
