//! Admission policies consumed by the simulator.

use crate::error::{Error, Result};

/// Integer concurrency target as a step function of the workload proxy.
///
/// Stored as run-length breakpoints: `levels[i]` applies on
/// `[starts[i], starts[i+1])`. Queries below the first breakpoint use the
/// first level; queries past the last use the last level.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundedPolicy {
    starts: Vec<f64>,
    levels: Vec<u32>,
    /// Level used past the tabulated range, when it differs from the last entry.
    beyond: Option<(f64, u32)>,
}

impl RoundedPolicy {
    /// Collapses a tabulated `(w, level)` sequence into runs.
    pub fn from_table(w: &[f64], levels: &[u32]) -> Result<Self> {
        if w.is_empty() || w.len() != levels.len() {
            return Err(Error::PolicyFormat("rounded policy needs matching, non-empty arrays".into()));
        }
        if w.windows(2).any(|p| p[1] <= p[0]) || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::PolicyFormat("workload grid must be finite and strictly increasing".into()));
        }
        let mut starts = vec![w[0]];
        let mut runs = vec![levels[0]];
        for (x, &l) in w.iter().zip(levels).skip(1) {
            if l != *runs.last().unwrap() {
                starts.push(*x);
                runs.push(l);
            }
        }
        Ok(Self {
            starts,
            levels: runs,
            beyond: None,
        })
    }

    /// Overrides the level for `w > w_end`.
    pub fn with_continuation(mut self, w_end: f64, level: u32) -> Self {
        if level != *self.levels.last().unwrap() {
            self.beyond = Some((w_end, level));
        }
        self
    }

    /// Constant level.
    pub fn constant(level: u32) -> Self {
        Self {
            starts: vec![0.0],
            levels: vec![level],
            beyond: None,
        }
    }

    #[inline]
    pub fn lookup(&self, w: f64) -> u32 {
        if let Some((w_end, level)) = self.beyond {
            if w > w_end {
                return level;
            }
        }
        let i = self.starts.partition_point(|&s| s <= w);
        self.levels[i.saturating_sub(1)]
    }

    /// `(start, level)` runs.
    pub fn runs(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.starts.iter().copied().zip(self.levels.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControlPolicy {
    /// Serve at most `K` jobs at once, FCFS overflow.
    Static(usize),
    /// Target `k(W~)` with the arrival/departure admission rules.
    Dynamic(RoundedPolicy),
}

impl ControlPolicy {
    pub fn label(&self) -> String {
        match self {
            ControlPolicy::Static(k) => format!("K={k}"),
            ControlPolicy::Dynamic(_) => "dynamic".to_string(),
        }
    }
}
