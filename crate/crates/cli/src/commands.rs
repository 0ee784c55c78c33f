//! One runner per mode. Each returns the artifacts to write; nothing here
//! touches the filesystem except reading policy files.

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use sdlps_core::control::{
    solve_binary_search, solve_newton, solve_with_doubling, DynamicPolicy, RoundingRule, SolverOptions,
};
use sdlps_core::rbm::{approx_argmin_k, static_approx};
use sdlps_core::sim::{replicate, sweep_static_k, SimOptions, SimResult};
use sdlps_core::{
    default_mu_grid, drift_from_mu, ControlPolicy, DriftProvenance, Family, InputProcess, ServiceRateCurve,
};

use crate::config::{ExperimentConfig, LoadedConfig, Mode};
use crate::error::CliError;
use crate::output::{csv_table, csv_with_header, provenance_line, Artifact, TOOLKIT};

/// Command-line settings that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub events: Option<u64>,
    pub rounding: Option<RoundingRule>,
}

impl Overrides {
    pub fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            c.sim.seed = s;
        }
        if let Some(e) = self.eps {
            c.solver.eps = e;
        }
        if let Some(n) = self.events {
            c.sim.events = n;
        }
        if let Some(r) = self.rounding {
            c.solver.rounding = r;
        }
    }
}

pub fn run(mode: Mode, loaded: &LoadedConfig, overrides: &Overrides) -> Result<Vec<Artifact>, CliError> {
    let mut cfg = loaded.config.clone();
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Config(format!("config declares mode `{m}` but `{mode}` was requested")));
        }
    }
    cfg.mode = Some(mode);
    overrides.apply(&mut cfg);
    let ctx = Ctx {
        digest: cfg.digest(),
        cfg: &cfg,
        loaded,
        rounding_forced: overrides.rounding.is_some(),
    };
    match mode {
        Mode::ApproxStatic => approx_static(&ctx),
        Mode::SweepStatic => sweep_static(&ctx),
        Mode::SolveDynamic => solve_dynamic(&ctx),
        Mode::SimulatePolicy => simulate_policy(&ctx),
        Mode::ReproduceTable1 => reproduce_table1(&ctx),
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    loaded: &'a LoadedConfig,
    digest: String,
    rounding_forced: bool,
}

impl Ctx<'_> {
    fn sim_options(&self) -> Result<SimOptions, CliError> {
        let s = &self.cfg.sim;
        let o = SimOptions {
            events: s.events,
            warmup_fraction: s.warmup_fraction,
            batches: s.batches,
            seed: s.seed,
            sample_spacing: None,
        };
        o.validate()?;
        Ok(o)
    }

    fn solver_options(&self) -> SolverOptions {
        let s = &self.cfg.solver;
        let mut o = SolverOptions::with_eps(s.eps);
        if let Some(r) = s.rtol {
            o.ode.rtol = r;
        }
        if let Some(n) = s.output_points {
            o.output_points = n;
        }
        o
    }
}

fn stable_levels(curve: &ServiceRateCurve, input: &InputProcess, ks: &[usize], label: &str) -> Vec<usize> {
    let (stable, skipped): (Vec<usize>, Vec<usize>) = ks.iter().partition(|&&k| curve.rate(k) > input.load());
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(usize::to_string).collect();
        warn!("{label}: skipping unstable K = {} (load {} >= mu(K))", list.join(", "), input.load());
    }
    stable
}

#[derive(Debug, Serialize)]
struct ApproxRow {
    series: String,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "E_N_approx")]
    e_n: f64,
    #[serde(rename = "E_W_approx")]
    e_w: f64,
}

fn approx_static(ctx: &Ctx<'_>) -> Result<Vec<Artifact>, CliError> {
    let curve = ctx.cfg.curve()?;
    let ks = ctx.cfg.levels(&curve)?;
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    for (si, (label, input)) in ctx.cfg.input_processes()?.into_iter().enumerate() {
        for k in stable_levels(&curve, &input, &ks, &label) {
            let rep = static_approx(&curve, &input, k)?;
            if ctx.cfg.levels.grid_tables {
                let header = ["w", "cdf", "pdf"];
                let w: Vec<_> = rep.workload_cdf.rows().collect();
                extra.push(Artifact::new(
                    format!("workload_s{}_k{k}.csv", si + 1),
                    false,
                    csv_with_header(&ctx.digest, &header, &w)?,
                ));
                let x: Vec<_> = rep.numjobs_cdf.rows().collect();
                extra.push(Artifact::new(
                    format!("numjobs_s{}_k{k}.csv", si + 1),
                    false,
                    csv_with_header(&ctx.digest, &["x", "cdf", "pdf"], &x)?,
                ));
            }
            rows.push(ApproxRow {
                series: label.clone(),
                k,
                e_n: rep.e_n,
                e_w: rep.e_w,
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::Domain("no stable concurrency level in range".into()));
    }
    let mut out = vec![Artifact::new("approx_static.csv", true, csv_table(&ctx.digest, &rows)?)];
    out.extend(extra);
    Ok(out)
}

/// One input process swept over static levels.
#[derive(Clone, Debug)]
pub struct SweepSeries {
    pub label: String,
    /// `(K, approximate mean, simulation)` for every stable level.
    pub rows: Vec<(usize, f64, SimResult)>,
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    series: &'a str,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "E_N_approx")]
    approx: f64,
    #[serde(rename = "E_N_sim")]
    sim: f64,
    ci: f64,
    events: u64,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotRow {
    pub series: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub source: &'static str,
    pub value: f64,
    pub ci: f64,
    /// Level minimizing this source's curve within the series.
    pub argmin: bool,
}

/// Tidy (series, K, source, value, ci, argmin) rows: one `sim` and one
/// `approx` row per level, approximation rows with `ci = 0`.
pub fn emit_plotdata(sweep: &[SweepSeries]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for s in sweep {
        let approx: Vec<(usize, sdlps_core::Result<f64>)> = s.rows.iter().map(|(k, a, _)| (*k, Ok(*a))).collect();
        let approx_best = approx_argmin_k(&approx);
        let sim: Vec<(usize, sdlps_core::Result<f64>)> = s.rows.iter().map(|(k, _, r)| (*k, Ok(r.e_n))).collect();
        let sim_best = approx_argmin_k(&sim);
        for (k, a, r) in &s.rows {
            out.push(PlotRow {
                series: s.label.clone(),
                k: *k,
                source: "sim",
                value: r.e_n,
                ci: r.ci_n,
                argmin: sim_best == Some(*k),
            });
            out.push(PlotRow {
                series: s.label.clone(),
                k: *k,
                source: "approx",
                value: *a,
                ci: 0.0,
                argmin: approx_best == Some(*k),
            });
        }
    }
    out
}

pub fn run_sweep(
    curve: &ServiceRateCurve,
    inputs: &[(String, InputProcess)],
    ks: &[usize],
    opts: &SimOptions,
) -> Result<Vec<SweepSeries>, CliError> {
    let mut out = Vec::new();
    for (label, input) in inputs {
        let stable = stable_levels(curve, input, ks, label);
        let approx = stable
            .iter()
            .map(|&k| static_approx(curve, input, k).map(|r| r.e_n))
            .collect::<Result<Vec<f64>, _>>()?;
        let sims = sweep_static_k(curve, input, &stable, opts)?;
        let rows = sims.into_iter().zip(approx).map(|((k, r), a)| (k, a, r)).collect();
        out.push(SweepSeries {
            label: label.clone(),
            rows,
        });
    }
    if out.iter().all(|s| s.rows.is_empty()) {
        return Err(CliError::Domain("no stable concurrency level in range".into()));
    }
    Ok(out)
}

fn sweep_static(ctx: &Ctx<'_>) -> Result<Vec<Artifact>, CliError> {
    let curve = ctx.cfg.curve()?;
    let ks = ctx.cfg.levels(&curve)?;
    let inputs = ctx.cfg.input_processes()?;
    let sweep = run_sweep(&curve, &inputs, &ks, &ctx.sim_options()?)?;
    let rows: Vec<SweepRow<'_>> = sweep
        .iter()
        .flat_map(|s| {
            s.rows.iter().map(|(k, a, r)| SweepRow {
                series: &s.label,
                k: *k,
                approx: *a,
                sim: r.e_n,
                ci: r.ci_n,
                events: r.events,
                seed: r.seed,
            })
        })
        .collect();
    let mut out = vec![Artifact::new("sweep_static.csv", true, csv_table(&ctx.digest, &rows)?)];
    if ctx.cfg.output.plotdata {
        out.push(Artifact::new(
            "plotdata.csv",
            false,
            csv_table(&ctx.digest, &emit_plotdata(&sweep))?,
        ));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct TraceRow {
    w_cont: f64,
    iteration: usize,
    v_n: f64,
    #[serde(rename = "abs_G0")]
    abs_g0: f64,
    #[serde(rename = "dG0_dv")]
    dg0: f64,
}

#[derive(Debug, Serialize)]
struct SearchRow {
    iteration: usize,
    v_n: f64,
    feasible: bool,
    w_stop: f64,
}

#[derive(Debug, Serialize)]
struct LadderRow {
    w_cont: f64,
    v: f64,
    iterations: usize,
}

/// Solved policy plus its trace artifacts.
struct Solved {
    policy: DynamicPolicy,
    trace: String,
    ladder: Option<String>,
}

fn solve(
    ctx: &Ctx<'_>,
    curve: &ServiceRateCurve,
    input: &InputProcess,
    rounding: RoundingRule,
) -> Result<Solved, CliError> {
    let drift = drift_from_mu(curve, input, &default_mu_grid(curve))?;
    let opts = ctx.solver_options();
    let s = &ctx.cfg.solver;
    let solved = match (s.method, s.w_cont) {
        (sdlps_core::control::SolverKind::BinarySearch, w) => {
            if w.is_some() {
                warn!("solver.w_cont is ignored by the binary search");
            }
            let sol = solve_binary_search(&drift, input, &opts)?;
            let rows: Vec<SearchRow> = sol
                .steps
                .iter()
                .enumerate()
                .map(|(i, st)| SearchRow {
                    iteration: i,
                    v_n: st.v,
                    feasible: st.feasible,
                    w_stop: st.w_stop,
                })
                .collect();
            Solved {
                policy: sol.policy,
                trace: csv_table(&ctx.digest, &rows)?,
                ladder: None,
            }
        }
        (sdlps_core::control::SolverKind::Newton, Some(w)) => {
            let sol = solve_newton(&drift, input, w, &opts)?;
            let rows = newton_rows(w, &sol.trace);
            Solved {
                policy: sol.policy,
                trace: csv_table(&ctx.digest, &rows)?,
                ladder: None,
            }
        }
        (sdlps_core::control::SolverKind::Newton, None) => {
            let d = solve_with_doubling(&drift, input, &opts)?;
            let rows = newton_rows(d.solution.policy.w_cont, &d.solution.trace);
            let ladder: Vec<LadderRow> = d
                .ladder
                .iter()
                .map(|r| LadderRow {
                    w_cont: r.w_cont,
                    v: r.v,
                    iterations: r.iterations,
                })
                .collect();
            Solved {
                policy: d.solution.policy,
                trace: csv_table(&ctx.digest, &rows)?,
                ladder: Some(csv_table(&ctx.digest, &ladder)?),
            }
        }
    };
    Ok(Solved {
        policy: solved.policy.with_rounding(rounding),
        ..solved
    })
}

fn newton_rows(w_cont: f64, trace: &[sdlps_core::control::NewtonStep]) -> Vec<TraceRow> {
    trace
        .iter()
        .map(|st| TraceRow {
            w_cont,
            iteration: st.iteration,
            v_n: st.v,
            abs_g0: st.g_at_zero.abs(),
            dg0: st.dg_at_zero,
        })
        .collect()
}

fn solve_dynamic(ctx: &Ctx<'_>) -> Result<Vec<Artifact>, CliError> {
    let curve = ctx.cfg.curve()?;
    let input = ctx.cfg.single_input()?;
    let solved = solve(ctx, &curve, &input, ctx.cfg.solver.rounding)?;
    info!(
        "v* = {} (W_cont = {}, {} grid points)",
        solved.policy.v,
        solved.policy.w_cont,
        solved.policy.w_grid.len()
    );
    let toml = solved
        .policy
        .to_toml(&input, DriftProvenance::FromMu, Some(ctx.digest.clone()))?;
    let mut out = vec![
        Artifact::new("policy.toml", true, format!("{}\n{toml}", provenance_line(&ctx.digest))),
        Artifact::new("trace.csv", false, solved.trace),
    ];
    if let Some(l) = solved.ladder {
        out.push(Artifact::new("ladder.csv", false, l));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SimRow<'a> {
    policy_id: &'a str,
    #[serde(rename = "K_or_dynamic")]
    k_or_dynamic: String,
    #[serde(rename = "E_N")]
    e_n: f64,
    ci: f64,
    events: u64,
    seed: u64,
}

/// Duration-weighted pool of independent replications.
#[derive(Debug, Serialize, PartialEq)]
pub struct Pooled {
    pub e_n: f64,
    pub ci_n: f64,
    pub e_w: f64,
    pub ci_w: f64,
    pub events: u64,
    pub duration: f64,
}

pub fn pool(results: &[SimResult]) -> Pooled {
    let total: f64 = results.iter().map(|r| r.duration).sum();
    let wt = |r: &SimResult| if total > 0.0 { r.duration / total } else { 1.0 / results.len() as f64 };
    let mean = |f: fn(&SimResult) -> f64| results.iter().map(|r| wt(r) * f(r)).sum::<f64>();
    let half = |f: fn(&SimResult) -> f64| results.iter().map(|r| (wt(r) * f(r)).powi(2)).sum::<f64>().sqrt();
    Pooled {
        e_n: mean(|r| r.e_n),
        ci_n: half(|r| r.ci_n),
        e_w: mean(|r| r.e_w),
        ci_w: half(|r| r.ci_w),
        events: results.iter().map(|r| r.events).sum(),
        duration: total,
    }
}

#[derive(Debug, Serialize)]
struct SimRecord<'a> {
    toolkit: &'static str,
    config_sha256: &'a str,
    policy_id: &'a str,
    pooled: Pooled,
    replications: &'a [SimResult],
}

fn simulate_policy(ctx: &Ctx<'_>) -> Result<Vec<Artifact>, CliError> {
    let curve = ctx.cfg.curve()?;
    let input = ctx.cfg.single_input()?;
    let sec = &ctx.cfg.simulate;
    let (policy_id, policy) = match (&sec.policy, sec.k) {
        (Some(_), Some(_)) => return Err(CliError::Config("simulate: give `policy` or `k`, not both".into())),
        (None, None) => return Err(CliError::Config("simulate: needs `policy` (file) or `k`".into())),
        (None, Some(k)) => (format!("static-{k}"), ControlPolicy::Static(k)),
        (Some(path), None) => {
            let full = ctx.loaded.base_dir.join(path);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::Config(format!("cannot read policy {}: {e}", full.display())))?;
            let mut p = DynamicPolicy::from_toml(&text)?;
            if ctx.rounding_forced {
                p = p.with_rounding(ctx.cfg.solver.rounding);
            }
            if (p.m - input.m()).abs() > 1e-12 || (p.m_e - input.m_e()).abs() > 1e-9 {
                warn!("policy was solved for m = {}, m_e = {}; simulating m = {}, m_e = {}", p.m, p.m_e, input.m(), input.m_e());
            }
            let id = path.file_stem().map_or("dynamic".into(), |s| s.to_string_lossy().into_owned());
            (id, ControlPolicy::from(&p))
        }
    };
    let reps = ctx.cfg.sim.replications;
    if reps == 0 {
        return Err(CliError::Config("sim.replications must be >= 1".into()));
    }
    let results = replicate(&curve, &input, &policy, &ctx.sim_options()?, reps)?;
    if results.iter().any(|r| r.unstable) {
        warn!("{policy_id}: static level is unstable at this load, the estimate does not converge");
    }
    let record = SimRecord {
        toolkit: TOOLKIT,
        config_sha256: &ctx.digest,
        policy_id: &policy_id,
        pooled: pool(&results),
        replications: &results,
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let k_or_dynamic = match &policy {
        ControlPolicy::Static(k) => k.to_string(),
        ControlPolicy::Dynamic(_) => "dynamic".to_string(),
    };
    let rows: Vec<SimRow<'_>> = results
        .iter()
        .map(|r| SimRow {
            policy_id: &policy_id,
            k_or_dynamic: k_or_dynamic.clone(),
            e_n: r.e_n,
            ci: r.ci_n,
            events: r.events,
            seed: r.seed,
        })
        .collect();
    Ok(vec![
        Artifact::new("simulation.json", true, json),
        Artifact::new("simulation.csv", false, csv_table(&ctx.digest, &rows)?),
    ])
}

#[derive(Debug, Serialize)]
struct Table1Row {
    cs2: f64,
    lambda: f64,
    #[serde(rename = "E_N_sim")]
    e_n: f64,
    ci: f64,
    reference: f64,
    rel_err: f64,
    v_star: f64,
    events: u64,
    seed: u64,
}

fn reproduce_table1(ctx: &Ctx<'_>) -> Result<Vec<Artifact>, CliError> {
    let curve = ctx.cfg.curve_or_quadratic()?;
    let cells = ctx.cfg.table1.cells();
    if cells.is_empty() {
        return Err(CliError::Config("table1.cells is empty".into()));
    }
    let sim = ctx.sim_options()?;
    let rows = cells
        .par_iter()
        .map(|c| {
            let input = InputProcess::poisson(c.lambda, Family::DegenerateHyperexponential, 1.0, c.cs2)?;
            let solved = solve(ctx, &curve, &input, ctx.cfg.solver.rounding)?;
            let r = sdlps_core::sim::simulate(&curve, &input, &ControlPolicy::from(&solved.policy), &sim)?;
            info!("lambda {} c_s^2 {}: E[N] = {:.4} vs {}", c.lambda, c.cs2, r.e_n, c.reference);
            Ok(Table1Row {
                cs2: c.cs2,
                lambda: c.lambda,
                e_n: r.e_n,
                ci: r.ci_n,
                reference: c.reference,
                rel_err: r.e_n / c.reference - 1.0,
                v_star: solved.policy.v,
                events: r.events,
                seed: r.seed,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(vec![Artifact::new("table1.csv", true, csv_table(&ctx.digest, &rows)?)])
}
