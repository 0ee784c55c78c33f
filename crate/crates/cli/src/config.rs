//! Experiment configuration (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdlps_core::control::{RoundingRule, SolverKind};
use sdlps_core::{CurveSpec, Family, InputProcess, InputSpec, ServiceRateCurve};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ApproxStatic,
    SweepStatic,
    SolveDynamic,
    SimulatePolicy,
    ReproduceTable1,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ApproxStatic => "approx-static",
            Mode::SweepStatic => "sweep-static",
            Mode::SolveDynamic => "solve-dynamic",
            Mode::SimulatePolicy => "simulate-policy",
            Mode::ReproduceTable1 => "reproduce-table1",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    /// Single input process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    /// Several input processes; sweeps produce one series per entry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputSpec>,
    #[serde(default, rename = "static")]
    pub levels: LevelSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub table1: Table1Section,
    #[serde(default)]
    pub output: OutputSection,
}

/// Static concurrency levels: an explicit list, or `k_min..=k_max`
/// (defaults 1 and the last index with positive rate).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Also write the (w, cdf, pdf) tables of every level.
    #[serde(default)]
    pub grid_tables: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_events")]
    pub events: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

fn default_events() -> u64 {
    1_000_000
}
fn default_warmup() -> f64 {
    0.2
}
fn default_batches() -> usize {
    32
}
fn default_seed() -> u64 {
    1
}
fn default_replications() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            events: default_events(),
            warmup_fraction: default_warmup(),
            batches: default_batches(),
            seed: default_seed(),
            replications: default_replications(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: SolverKind,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub rounding: RoundingRule,
    /// Fixed continuation point; without it Newton doubles `W` until the cost settles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_cont: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_points: Option<usize>,
}

fn default_method() -> SolverKind {
    SolverKind::Newton
}
fn default_eps() -> f64 {
    1e-5
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            eps: default_eps(),
            rounding: RoundingRule::default(),
            w_cont: None,
            rtol: None,
            output_points: None,
        }
    }
}

/// Policy to simulate: a solved policy file or a static level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Cell {
    pub lambda: f64,
    pub cs2: f64,
    /// Published mean headcount under the diffusion policy.
    pub reference: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Section {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<Table1Cell>>,
}

pub const TABLE1_CELLS: [(f64, f64, f64); 6] = [
    (0.7, 4.0, 1.744),
    (0.8, 4.0, 2.885),
    (0.9, 4.0, 4.893),
    (0.7, 19.0, 2.94),
    (0.8, 19.0, 6.63),
    (0.9, 19.0, 14.33),
];

impl Table1Section {
    pub fn cells(&self) -> Vec<Table1Cell> {
        self.cells.clone().unwrap_or_else(|| {
            TABLE1_CELLS
                .iter()
                .map(|&(lambda, cs2, reference)| Table1Cell { lambda, cs2, reference })
                .collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Tidy plot table next to the sweep output.
    #[serde(default = "yes")]
    pub plotdata: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, plotdata: true }
    }
}

/// A config together with the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    /// Canonical TOML of the effective configuration; its SHA-256 tags every output.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn curve(&self) -> Result<ServiceRateCurve, CliError> {
        let spec = self
            .curve
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [curve] section".into()))?;
        ServiceRateCurve::from_spec(spec).map_err(|e| CliError::Config(format!("curve: {e}")))
    }

    /// The curve, defaulting to `1.25 - i^2/150`.
    pub fn curve_or_quadratic(&self) -> Result<ServiceRateCurve, CliError> {
        match self.curve {
            Some(_) => self.curve(),
            None => Ok(ServiceRateCurve::quadratic(1.25, 150.0).expect("valid curve")),
        }
    }

    pub fn input_specs(&self) -> Result<Vec<InputSpec>, CliError> {
        match (&self.input, self.inputs.is_empty()) {
            (Some(_), false) => Err(CliError::Config("give either `input` or `inputs`, not both".into())),
            (None, true) => Err(CliError::Config("missing [input] section".into())),
            (Some(one), true) => Ok(vec![one.clone()]),
            (None, false) => Ok(self.inputs.clone()),
        }
    }

    pub fn input_processes(&self) -> Result<Vec<(String, InputProcess)>, CliError> {
        self.input_specs()?
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let inp =
                    InputProcess::from_spec(spec).map_err(|e| CliError::Config(format!("input #{}: {e}", i + 1)))?;
                Ok((series_label(spec), inp))
            })
            .collect()
    }

    pub fn single_input(&self) -> Result<InputProcess, CliError> {
        let mut all = self.input_processes()?;
        if all.len() != 1 {
            return Err(CliError::Config(format!("this mode takes one input process, got {}", all.len())));
        }
        Ok(all.remove(0).1)
    }

    pub fn levels(&self, curve: &ServiceRateCurve) -> Result<Vec<usize>, CliError> {
        let s = &self.levels;
        let ks: Vec<usize> = match &s.k {
            Some(list) => {
                if s.k_min.is_some() || s.k_max.is_some() {
                    return Err(CliError::Config("static: give `k` or `k_min`/`k_max`, not both".into()));
                }
                list.clone()
            }
            None => {
                let lo = s.k_min.unwrap_or(1);
                let hi = s.k_max.unwrap_or(curve.max_index());
                (lo..=hi).collect()
            }
        };
        if ks.is_empty() {
            return Err(CliError::Config("static: empty range of concurrency levels".into()));
        }
        if ks.contains(&0) {
            return Err(CliError::Config("static: levels must be >= 1".into()));
        }
        Ok(ks)
    }
}

/// `family lambda=.. cs2=..` label, unique enough to tell sweep series apart.
pub fn series_label(spec: &InputSpec) -> String {
    let arrivals = if spec.interarrival == Family::Exponential && spec.ca2 == 1.0 {
        "poisson".to_string()
    } else {
        format!("{}:ca2={}", spec.interarrival, spec.ca2)
    };
    format!("{arrivals}/{}:cs2={}/lambda={}/m={}", spec.jobsize, spec.cs2, spec.lambda, spec.m)
}
