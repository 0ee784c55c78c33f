//! Schema and stability pre-checks with aggregated diagnostics.

use std::fmt;
use std::path::Path;

use sdlps_core::control::DynamicPolicy;

use crate::config::{ExperimentConfig, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    /// Schema or value problem: exit code 2.
    Config,
    /// Load cannot be served by any level: exit code 3.
    Unstabilizable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Config => "error",
            Severity::Unstabilizable => "unstabilizable",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    fn push(&mut self, severity: Severity, field: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity,
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn is_ok(&self) -> bool {
        self.diagnostics.iter().all(|d| d.severity == Severity::Warning)
    }

    pub fn exit_code(&self) -> u8 {
        match self.diagnostics.iter().map(|d| d.severity).max() {
            Some(Severity::Config) => 2,
            Some(Severity::Unstabilizable) => 3,
            _ => 0,
        }
    }

    pub fn render(&self) -> String {
        let mut s: String = self.diagnostics.iter().map(|d| format!("{d}\n")).collect();
        if self.is_ok() {
            s.push_str("OK\n");
        }
        s
    }
}

pub fn validate_path(path: &Path) -> Report {
    let mut report = Report::default();
    match ExperimentConfig::load(path) {
        Err(e) => report.push(Severity::Config, "config", e.to_string()),
        Ok(loaded) => validate_config(&loaded.config, &loaded.base_dir, &mut report),
    }
    report
}

pub fn validate_config(cfg: &ExperimentConfig, base_dir: &Path, report: &mut Report) {
    let table1 = cfg.mode == Some(Mode::ReproduceTable1);
    let curve = if table1 { cfg.curve_or_quadratic() } else { cfg.curve() };
    let curve = match curve {
        Ok(c) => Some(c),
        Err(e) => {
            report.push(Severity::Config, "curve", e.to_string());
            None
        }
    };

    let inputs = if table1 && cfg.input.is_none() && cfg.inputs.is_empty() {
        Vec::new()
    } else {
        match cfg.input_processes() {
            Ok(v) => v,
            Err(e) => {
                report.push(Severity::Config, "input", e.to_string());
                Vec::new()
            }
        }
    };
    if matches!(cfg.mode, Some(Mode::SolveDynamic | Mode::SimulatePolicy)) && inputs.len() > 1 {
        report.push(Severity::Config, "inputs", "this mode takes one input process");
    }

    let s = &cfg.sim;
    if !(0.0..1.0).contains(&s.warmup_fraction) {
        report.push(Severity::Config, "sim.warmup_fraction", "must lie in [0, 1)");
    }
    if s.batches < 2 {
        report.push(Severity::Config, "sim.batches", "need at least 2 batches");
    }
    if s.replications == 0 {
        report.push(Severity::Config, "sim.replications", "must be >= 1");
    }
    if !(cfg.solver.eps > 0.0 && cfg.solver.eps.is_finite()) {
        report.push(Severity::Config, "solver.eps", "must be finite and > 0");
    }
    if let Some(w) = cfg.solver.w_cont {
        if !(w > 0.0 && w.is_finite()) {
            report.push(Severity::Config, "solver.w_cont", "must be finite and > 0");
        }
    }

    if let Some(curve) = &curve {
        let needs_levels = matches!(cfg.mode, None | Some(Mode::ApproxStatic | Mode::SweepStatic));
        let levels = if needs_levels {
            match cfg.levels(curve) {
                Ok(ks) => ks,
                Err(e) => {
                    report.push(Severity::Config, "static", e.to_string());
                    Vec::new()
                }
            }
        } else {
            Vec::new()
        };
        for (label, inp) in &inputs {
            let load = inp.load();
            if load >= curve.max_rate() {
                report.push(
                    Severity::Unstabilizable,
                    format!("input {label}"),
                    format!("unstabilizable: load {load} >= max service rate {}", curve.max_rate()),
                );
                continue;
            }
            let unstable: Vec<String> = levels
                .iter()
                .filter(|&&k| load >= curve.rate(k))
                .map(|k| k.to_string())
                .collect();
            if !unstable.is_empty() && !levels.is_empty() {
                let sev = if unstable.len() == levels.len() { Severity::Config } else { Severity::Warning };
                report.push(
                    sev,
                    format!("input {label}"),
                    format!("load {load} >= mu(K) for K = {} (skipped)", unstable.join(", ")),
                );
            }
        }
        if table1 {
            for c in cfg.table1.cells() {
                if c.lambda >= curve.max_rate() {
                    report.push(
                        Severity::Unstabilizable,
                        format!("table1 cell lambda={} cs2={}", c.lambda, c.cs2),
                        format!("unstabilizable: load {} >= max service rate {}", c.lambda, curve.max_rate()),
                    );
                }
                if !(c.reference > 0.0) {
                    report.push(Severity::Config, "table1.cells.reference", "must be > 0");
                }
            }
        }
        if let Some(k) = cfg.simulate.k {
            if k == 0 {
                report.push(Severity::Config, "simulate.k", "must be >= 1");
            }
            for (label, inp) in &inputs {
                if k > 0 && inp.load() >= curve.rate(k) {
                    report.push(
                        Severity::Warning,
                        "simulate.k",
                        format!("K={k} is unstable for {label}: load {} >= mu(K) = {}", inp.load(), curve.rate(k)),
                    );
                }
            }
        }
    }

    if cfg.mode == Some(Mode::SimulatePolicy) {
        match (&cfg.simulate.policy, cfg.simulate.k) {
            (Some(_), Some(_)) => report.push(Severity::Config, "simulate", "give `policy` or `k`, not both"),
            (None, None) => report.push(Severity::Config, "simulate", "needs `policy` (file) or `k`"),
            _ => {}
        }
    }
    if let Some(p) = &cfg.simulate.policy {
        let full = base_dir.join(p);
        match std::fs::read_to_string(&full) {
            Err(e) => report.push(Severity::Config, "simulate.policy", format!("{}: {e}", full.display())),
            Ok(text) => {
                if let Err(e) = DynamicPolicy::from_toml(&text) {
                    report.push(Severity::Config, "simulate.policy", format!("{}: {e}", full.display()));
                }
            }
        }
    }
}
