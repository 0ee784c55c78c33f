//! Solved dynamic policies, their rounding, and their on-disk form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriftProvenance, InputProcess};
use crate::policy::{ControlPolicy, RoundedPolicy};

pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    BinarySearch,
    Newton,
}

/// How real-valued concurrency levels become integers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingRule {
    /// Smallest integer `>= k`, so an admit-everything control still admits
    /// under the headcount workload proxy.
    #[default]
    Up,
    /// `floor(k + 1/2)`.
    NearestHalfUp,
}

impl RoundingRule {
    pub fn apply(self, k: f64) -> u32 {
        match self {
            RoundingRule::Up => round_up(k),
            RoundingRule::NearestHalfUp => round_half_up(k),
        }
    }
}

/// Gradient of the relative value function on the policy grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueGradientTable {
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    /// Sensitivity `dG/dv`, from Newton solves only.
    pub dgdv: Option<Vec<f64>>,
    pub v: f64,
    pub k_of_w: Vec<f64>,
}

/// Real-valued concurrency control `k(w)` tabulated on a workload grid, with
/// the fluid policy's level `k_hat` beyond the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicPolicy {
    pub w_grid: Vec<f64>,
    pub k: Vec<f64>,
    pub k_tilde: Vec<u32>,
    pub rounding: RoundingRule,
    /// Certified average cost.
    pub v: f64,
    pub solver: SolverKind,
    /// Fluid continuation point.
    pub w_cont: f64,
    pub eps: f64,
    pub k_hat: f64,
    pub m: f64,
    pub m_e: f64,
    pub table: Option<ValueGradientTable>,
}

// levels within this distance of an integer snap to it before rounding up
const SNAP: f64 = 1e-9;

/// `ceil(k)`, never negative.
pub fn round_up(k: f64) -> u32 {
    let r = (k - SNAP).ceil();
    if r <= 0.0 {
        0
    } else {
        r as u32
    }
}

/// `floor(k + 1/2)`, never negative.
pub fn round_half_up(k: f64) -> u32 {
    let r = (k + 0.5).floor();
    if r <= 0.0 {
        0
    } else {
        r as u32
    }
}

impl DynamicPolicy {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        w_grid: Vec<f64>,
        k: Vec<f64>,
        v: f64,
        solver: SolverKind,
        w_cont: f64,
        eps: f64,
        k_hat: f64,
        m: f64,
        m_e: f64,
        table: Option<ValueGradientTable>,
    ) -> Result<Self> {
        if w_grid.is_empty() || w_grid.len() != k.len() {
            return Err(Error::PolicyFormat("w_grid and k must be non-empty and of equal length".into()));
        }
        if w_grid.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::PolicyFormat("w_grid must be strictly increasing".into()));
        }
        if k.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::PolicyFormat("k values must be finite and >= 0".into()));
        }
        let rounding = RoundingRule::default();
        let k_tilde = k.iter().map(|&x| rounding.apply(x)).collect();
        Ok(Self {
            w_grid,
            k,
            k_tilde,
            rounding,
            v,
            solver,
            w_cont,
            eps,
            k_hat,
            m,
            m_e,
            table,
        })
    }

    pub fn with_rounding(mut self, rounding: RoundingRule) -> Self {
        self.rounding = rounding;
        self.k_tilde = self.k.iter().map(|&x| rounding.apply(x)).collect();
        self
    }

    /// `k(w)` by linear interpolation; `k_hat` past the grid.
    pub fn k_at(&self, w: f64) -> f64 {
        let n = self.w_grid.len();
        if w > self.w_grid[n - 1] {
            return self.k_hat;
        }
        if w <= self.w_grid[0] || n == 1 {
            return self.k[0];
        }
        let i = self.w_grid.partition_point(|&g| g <= w) - 1;
        let i = i.min(n - 2);
        let t = (w - self.w_grid[i]) / (self.w_grid[i + 1] - self.w_grid[i]);
        self.k[i] + t * (self.k[i + 1] - self.k[i])
    }

    /// Largest violation of `0 ≤ k(w) ≤ w/m_e` over the grid (0 when admissible).
    pub fn admissibility_violation(&self) -> f64 {
        self.w_grid
            .iter()
            .zip(&self.k)
            .map(|(&w, &k)| (k - w / self.m_e).max(-k).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn to_document(&self, input: &InputProcess, drift: DriftProvenance, config_digest: Option<String>) -> PolicyDocument {
        PolicyDocument {
            metadata: PolicyMetadata {
                version: POLICY_FORMAT_VERSION,
                lambda: input.lambda(),
                m: self.m,
                m_e: self.m_e,
                ca2: input.ca2(),
                cs2: input.cs2(),
                drift,
                solver: self.solver,
                rounding: self.rounding,
                v: self.v,
                w_cont: self.w_cont,
                eps: self.eps,
                k_hat: self.k_hat,
                config_digest,
            },
            w_grid: self.w_grid.clone(),
            k: self.k.clone(),
            k_tilde: self.k_tilde.clone(),
        }
    }

    pub fn from_document(doc: &PolicyDocument) -> Result<Self> {
        if doc.metadata.version != POLICY_FORMAT_VERSION {
            return Err(Error::PolicyFormat(format!(
                "unsupported policy format version {} (expected {POLICY_FORMAT_VERSION})",
                doc.metadata.version
            )));
        }
        let md = &doc.metadata;
        let p = Self::new(
            doc.w_grid.clone(),
            doc.k.clone(),
            md.v,
            md.solver,
            md.w_cont,
            md.eps,
            md.k_hat,
            md.m,
            md.m_e,
            None,
        )?
        .with_rounding(md.rounding);
        if p.k_tilde != doc.k_tilde {
            return Err(Error::PolicyFormat("k_tilde does not match the rounded k values".into()));
        }
        Ok(p)
    }

    pub fn to_toml(&self, input: &InputProcess, drift: DriftProvenance, config_digest: Option<String>) -> Result<String> {
        toml::to_string(&self.to_document(input, drift, config_digest)).map_err(|e| Error::PolicyFormat(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: PolicyDocument = toml::from_str(text).map_err(|e| Error::PolicyFormat(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Integer policy `k_tilde(w)` as a step-function lookup. Below the first grid
/// point the first level applies; beyond the grid the rounded `k_hat`.
pub fn discretize_policy(policy: &DynamicPolicy) -> RoundedPolicy {
    let table = RoundedPolicy::from_table(&policy.w_grid, &policy.k_tilde)
        .expect("policy grid validated at construction");
    table.with_continuation(*policy.w_grid.last().unwrap(), policy.rounding.apply(policy.k_hat))
}

impl From<&DynamicPolicy> for ControlPolicy {
    fn from(p: &DynamicPolicy) -> Self {
        ControlPolicy::Dynamic(discretize_policy(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyMetadata {
    pub version: u32,
    pub lambda: f64,
    pub m: f64,
    pub m_e: f64,
    pub ca2: f64,
    pub cs2: f64,
    pub drift: DriftProvenance,
    pub solver: SolverKind,
    #[serde(default)]
    pub rounding: RoundingRule,
    pub v: f64,
    pub w_cont: f64,
    pub eps: f64,
    pub k_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub metadata: PolicyMetadata,
    pub w_grid: Vec<f64>,
    pub k: Vec<f64>,
    pub k_tilde: Vec<u32>,
}
