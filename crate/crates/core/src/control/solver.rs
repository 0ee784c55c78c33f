//! Average-cost solvers for the workload diffusion control problem.

use log::debug;
use serde::{Deserialize, Serialize};

use super::argmin::{fluid_policy, ArgminContext, DEFAULT_ARGMIN_POINTS};
use super::ode::{integrate, OdeOptions, Trajectory};
use super::policy::{DynamicPolicy, SolverKind, ValueGradientTable};
use crate::error::{Error, Result};
use crate::model::{DriftFunction, InputProcess};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub eps: f64,
    pub ode: OdeOptions,
    pub argmin_points: usize,
    /// Forward integrations of the binary search give up past this workload.
    pub forward_cap: f64,
    /// Grid size of the returned policy table.
    pub output_points: usize,
    pub max_cost_doublings: usize,
    pub max_newton_iterations: usize,
    pub max_w_doublings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            ode: OdeOptions::default(),
            argmin_points: DEFAULT_ARGMIN_POINTS,
            forward_cap: 1e5,
            output_points: 2049,
            max_cost_doublings: 60,
            max_newton_iterations: 100,
            max_w_doublings: 20,
        }
    }
}

impl SolverOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param("eps", format!("must be finite and > 0, got {}", self.eps)));
        }
        if self.output_points < 2 {
            return Err(Error::param("output_points", "need at least 2"));
        }
        Ok(())
    }
}

/// Shared constants of one control problem.
pub(crate) struct Problem<'a> {
    pub ctx: ArgminContext<'a>,
    pub drift: &'a DriftFunction,
    pub two_over_s2: f64,
    pub sigma2: f64,
    pub m: f64,
    pub m_e: f64,
    pub k_hat: f64,
    pub theta_hat: f64,
    pub knee: f64,
}

impl<'a> Problem<'a> {
    pub fn new(drift: &'a DriftFunction, input: &InputProcess, opts: &SolverOptions) -> Result<Self> {
        input.require_diffusion()?;
        opts.validate()?;
        let theta_hat = drift.theta_hat();
        if !(theta_hat > 0.0) {
            return Err(Error::Unstabilizable {
                load: input.load(),
                max_rate: f64::NAN,
            });
        }
        let sigma2 = drift.sigma2();
        let m_e = input.m_e();
        Ok(Self {
            ctx: ArgminContext::new(drift, input, opts.argmin_points),
            drift,
            two_over_s2: 2.0 / sigma2,
            sigma2,
            m: input.m(),
            m_e,
            k_hat: drift.k_hat(),
            theta_hat,
            knee: drift.k_hat() * m_e,
        })
    }

    /// Linear gradient of the fluid continuation for `w ≥ k_hat m_e`.
    pub fn closed_form(&self, v: f64, w: f64) -> f64 {
        let th = self.theta_hat;
        w / (self.m * th) + (self.k_hat * self.ctx.slope + self.sigma2 / (2.0 * self.m * th) - v) / th
    }

    #[inline]
    fn g_rhs(&self, v: f64, w: f64, g: f64) -> (f64, f64) {
        let (k, phi) = self.ctx.argmin(w, g);
        (self.two_over_s2 * (v - w / self.m - phi), k)
    }

    pub fn fluid_k(&self, w: f64) -> f64 {
        fluid_policy(w, self.drift, self.m_e)
    }
}

/// Gradient of the fluid continuation, `A(w) - v B(w)` below the knee
/// `k_hat m_e` and the closed form above it.
#[derive(Clone, Debug)]
pub struct FluidGradient {
    knee: f64,
    theta_hat: f64,
    k_hat: f64,
    slope: f64,
    m: f64,
    sigma2: f64,
    table: Option<Trajectory<2>>,
    a0: f64,
    b0: f64,
}

impl FluidGradient {
    pub fn knee(&self) -> f64 {
        self.knee
    }

    pub fn eval(&self, v: f64, w: f64) -> f64 {
        match &self.table {
            Some(t) if w < self.knee => {
                let [a, b] = t.eval(w);
                a - v * b
            }
            _ => {
                let th = self.theta_hat;
                w / (self.m * th) + (self.k_hat * self.slope + self.sigma2 / (2.0 * self.m * th) - v) / th
            }
        }
    }

    pub fn at_zero(&self, v: f64) -> f64 {
        self.a0 - v * self.b0
    }

    /// Cost of the fluid policy, the `v` with zero gradient at the origin.
    pub fn fluid_cost(&self) -> f64 {
        self.a0 / self.b0
    }

    /// `(w, value)` on `points` uniform nodes of `[0, k_hat m_e]`.
    pub fn table(&self, v: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let w = self.knee * i as f64 / (n - 1) as f64;
                (w, self.eval(v, w))
            })
            .collect()
    }
}

pub fn fluid_continuation_gradient(
    drift: &DriftFunction,
    input: &InputProcess,
    opts: &SolverOptions,
) -> Result<FluidGradient> {
    let p = Problem::new(drift, input, opts)?;
    fluid_gradient(&p, &opts.ode)
}

fn fluid_gradient(p: &Problem<'_>, ode: &OdeOptions) -> Result<FluidGradient> {
    let th = p.theta_hat;
    let a_knee = (p.k_hat + p.sigma2 / (2.0 * p.m * th)) / th;
    let b_knee = 1.0 / th;
    let (table, a0, b0) = if p.knee > 0.0 {
        let rhs = |w: f64, y: &[f64; 2]| {
            let kf = p.fluid_k(w);
            let tf = p.drift.eval(kf);
            [
                p.two_over_s2 * (-(w / p.m + kf * p.ctx.slope) + tf * y[0]),
                p.two_over_s2 * (-1.0 + tf * y[1]),
            ]
        };
        let out = integrate(rhs, p.knee, [a_knee, b_knee], 0.0, ode, |_, _| None)?;
        let (_, [a0, b0]) = out.trajectory.last();
        (Some(out.trajectory), a0, b0)
    } else {
        (None, a_knee, b_knee)
    };
    if !(b0 > 0.0) {
        return Err(Error::Numerical(format!("fluid gradient sensitivity at 0 is {b0}, expected > 0")));
    }
    Ok(FluidGradient {
        knee: p.knee,
        theta_hat: th,
        k_hat: p.k_hat,
        slope: p.ctx.slope,
        m: p.m,
        sigma2: p.sigma2,
        table,
        a0,
        b0,
    })
}

/// Outcome of one feasibility test of the binary search.
#[derive(Clone, Debug)]
pub enum Feasibility {
    /// The fluid policy already achieves the guess.
    FluidBelow,
    /// Forward gradient met the fluid continuation at `w_bar`.
    Feasible { w_bar: f64, trajectory: Trajectory<1> },
    /// Forward gradient fell below `-eps` at `w_under`.
    Infeasible { w_under: f64 },
}

pub(crate) fn feasibility(p: &Problem<'_>, fg: &FluidGradient, v: f64, opts: &SolverOptions) -> Result<Feasibility> {
    if fg.at_zero(v) < 0.0 {
        return Ok(Feasibility::FluidBelow);
    }
    let eps = opts.eps;
    let out = integrate(
        |w, y: &[f64; 1]| [p.g_rhs(v, w, y[0]).0],
        0.0,
        [0.0],
        opts.forward_cap,
        &opts.ode,
        |w, y| {
            if y[0] < -eps {
                Some(1)
            } else if y[0] >= fg.eval(v, w) {
                Some(0)
            } else {
                None
            }
        },
    )?;
    match out.event {
        Some((0, w_bar)) => Ok(Feasibility::Feasible {
            w_bar,
            trajectory: out.trajectory,
        }),
        Some((_, w_under)) => Ok(Feasibility::Infeasible { w_under }),
        None => Err(Error::NoConvergence(format!(
            "forward gradient for v = {v} neither met the fluid continuation nor turned negative before w = {}",
            opts.forward_cap
        ))),
    }
}

/// Tests whether `v` is the cost of a feasible policy.
pub fn test_feasibility(drift: &DriftFunction, input: &InputProcess, v: f64, opts: &SolverOptions) -> Result<Feasibility> {
    let p = Problem::new(drift, input, opts)?;
    let fg = fluid_gradient(&p, &opts.ode)?;
    feasibility(&p, &fg, v, opts)
}

/// Binary search run record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub v: f64,
    pub feasible: bool,
    /// Workload where the forward test stopped.
    pub w_stop: f64,
}

#[derive(Clone, Debug)]
pub struct BinarySearchSolution {
    pub policy: DynamicPolicy,
    pub lower: f64,
    pub upper: f64,
    pub steps: Vec<SearchStep>,
    /// Number of bisection steps after the bracket was established.
    pub bisections: usize,
}

pub fn solve_binary_search(
    drift: &DriftFunction,
    input: &InputProcess,
    opts: &SolverOptions,
) -> Result<BinarySearchSolution> {
    let p = Problem::new(drift, input, opts)?;
    let fg = fluid_gradient(&p, &opts.ode)?;
    let mut lower = 0.0f64;
    let mut upper: Option<f64> = None;
    let mut best: Option<Feasibility> = None;
    let mut v = 1.0f64;
    let mut doublings = 0usize;
    let mut bisections = 0usize;
    let mut steps = Vec::new();
    loop {
        if let Some(u) = upper {
            if u - lower < opts.eps {
                break;
            }
        }
        let outcome = feasibility(&p, &fg, v, opts)?;
        let (feasible, w_stop) = match &outcome {
            Feasibility::FluidBelow => (true, 0.0),
            Feasibility::Feasible { w_bar, .. } => (true, *w_bar),
            Feasibility::Infeasible { w_under } => (false, *w_under),
        };
        debug!("binary search v = {v}: feasible = {feasible}, stop at w = {w_stop}");
        steps.push(SearchStep { v, feasible, w_stop });
        if upper.is_some() {
            bisections += 1;
        }
        if feasible {
            upper = Some(v);
            best = Some(outcome);
            v = 0.5 * (lower + v);
        } else if let Some(u) = upper {
            lower = v;
            v = 0.5 * (lower + u);
        } else {
            doublings += 1;
            if doublings > opts.max_cost_doublings {
                return Err(Error::NoConvergence(format!(
                    "no feasible average cost found after {} doublings (last guess {v})",
                    opts.max_cost_doublings
                )));
            }
            lower = v;
            v *= 2.0;
        }
    }
    let upper = upper.unwrap();
    let policy = match best.unwrap() {
        Feasibility::Feasible { w_bar, trajectory } => {
            build_policy(&p, opts, upper, w_bar, SolverKind::BinarySearch, |w| trajectory.eval(w)[0], None, Some(&fg))
        }
        _ => build_policy(&p, opts, upper, 0.0, SolverKind::BinarySearch, |w| fg.eval(upper, w), None, Some(&fg)),
    }?;
    Ok(BinarySearchSolution {
        policy,
        lower,
        upper,
        steps,
        bisections,
    })
}

/// One Newton iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub v: f64,
    pub g_at_zero: f64,
    pub dg_at_zero: f64,
    pub v_next: f64,
}

#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub policy: DynamicPolicy,
    /// Initial guess, the fluid policy's cost.
    pub v0: f64,
    pub trace: Vec<NewtonStep>,
}

impl NewtonSolution {
    /// `v_0, v_1, …` followed by the accepted cost.
    pub fn iterates(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.trace.iter().map(|s| s.v).collect();
        v.push(self.policy.v);
        v
    }
}

fn newton_sweep(p: &Problem<'_>, v: f64, w_cont: f64, ode: &OdeOptions) -> Result<Trajectory<2>> {
    let g_end = p.closed_form(v, w_cont);
    let dg_end = -1.0 / p.theta_hat;
    let rhs = |w: f64, y: &[f64; 2]| {
        let (dg, k) = p.g_rhs(v, w, y[0]);
        [dg, p.two_over_s2 * (1.0 + p.drift.eval(k) * y[1])]
    };
    Ok(integrate(rhs, w_cont, [g_end, dg_end], 0.0, ode, |_, _| None)?.trajectory)
}

/// `(G_v(0), dG_v/dv(0))` from one backward sweep with terminal data at `w_cont`.
pub fn newton_residual(
    drift: &DriftFunction,
    input: &InputProcess,
    v: f64,
    w_cont: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    let p = Problem::new(drift, input, opts)?;
    let (_, [g0, dg0]) = newton_sweep(&p, v, w_cont, &opts.ode)?.last();
    Ok((g0, dg0))
}

/// Optimal-control gradient integrated forward from `G(0) = g0` to `w_end`.
pub fn forward_gradient(
    drift: &DriftFunction,
    input: &InputProcess,
    v: f64,
    g0: f64,
    w_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory<1>> {
    let p = Problem::new(drift, input, opts)?;
    let out = integrate(|w, y: &[f64; 1]| [p.g_rhs(v, w, y[0]).0], 0.0, [g0], w_end, &opts.ode, |_, _| None)?;
    Ok(out.trajectory)
}

pub fn solve_newton(
    drift: &DriftFunction,
    input: &InputProcess,
    w_cont: f64,
    opts: &SolverOptions,
) -> Result<NewtonSolution> {
    let p = Problem::new(drift, input, opts)?;
    newton(&p, w_cont, opts)
}

fn newton(p: &Problem<'_>, w_cont: f64, opts: &SolverOptions) -> Result<NewtonSolution> {
    if !(w_cont >= p.knee && w_cont > 0.0 && w_cont.is_finite()) {
        return Err(Error::Domain(format!(
            "fluid continuation point {w_cont} must be positive and >= k_hat m_e = {}",
            p.knee
        )));
    }
    let v0 = fluid_gradient(p, &opts.ode)?.fluid_cost();
    let mut v = v0;
    let mut trace = Vec::new();
    for iteration in 0..opts.max_newton_iterations {
        let traj = newton_sweep(p, v, w_cont, &opts.ode)?;
        let (_, [g0, dg0]) = traj.last();
        if !(dg0 < 0.0) || !g0.is_finite() {
            return Err(Error::Numerical(format!(
                "Newton sensitivity at 0 is {dg0} (G(0) = {g0}, v = {v}, W = {w_cont}); expected < 0"
            )));
        }
        let v_next = v - g0 / dg0;
        debug!("newton {iteration}: v = {v}, G(0) = {g0}, g(0) = {dg0}");
        trace.push(NewtonStep {
            iteration,
            v,
            g_at_zero: g0,
            dg_at_zero: dg0,
            v_next,
        });
        if g0.abs() <= opts.eps {
            let policy = build_policy(
                p,
                opts,
                v_next,
                w_cont,
                SolverKind::Newton,
                |w| traj.eval(w)[0],
                Some(&|w| traj.eval(w)[1]),
                None,
            )?;
            return Ok(NewtonSolution { policy, v0, trace });
        }
        v = v_next;
    }
    Err(Error::NoConvergence(format!(
        "Newton iteration did not reach |G(0)| <= {} in {} iterations",
        opts.eps, opts.max_newton_iterations
    )))
}

/// One rung of the continuation-point ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingRung {
    pub w_cont: f64,
    pub v: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct DoublingSolution {
    pub solution: NewtonSolution,
    pub ladder: Vec<DoublingRung>,
}

/// Starting continuation point of the ladder, `max(4 k_hat m_e, 20 m)`.
pub fn initial_continuation_point(drift: &DriftFunction, input: &InputProcess) -> f64 {
    (4.0 * drift.k_hat() * input.m_e()).max(20.0 * input.m())
}

/// Newton solves at `W, 2W, 4W, …` until successive costs differ by at most `eps`.
pub fn solve_with_doubling(drift: &DriftFunction, input: &InputProcess, opts: &SolverOptions) -> Result<DoublingSolution> {
    let p = Problem::new(drift, input, opts)?;
    let mut w = initial_continuation_point(drift, input);
    let mut prev = newton(&p, w, opts)?;
    let mut ladder = vec![DoublingRung {
        w_cont: w,
        v: prev.policy.v,
        iterations: prev.trace.len(),
    }];
    for _ in 0..opts.max_w_doublings {
        w *= 2.0;
        let cur = newton(&p, w, opts)?;
        ladder.push(DoublingRung {
            w_cont: w,
            v: cur.policy.v,
            iterations: cur.trace.len(),
        });
        if (cur.policy.v - prev.policy.v).abs() <= opts.eps {
            return Ok(DoublingSolution { solution: cur, ladder });
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "continuation-point ladder did not settle within {} doublings (last W = {w})",
        opts.max_w_doublings
    )))
}

/// Resamples a solved gradient onto a uniform grid and recomputes `k` there.
/// Past `w_cont` the fluid policy applies, with gradient `fluid` when given.
#[allow(clippy::too_many_arguments)]
fn build_policy(
    p: &Problem<'_>,
    opts: &SolverOptions,
    v: f64,
    w_cont: f64,
    solver: SolverKind,
    gradient: impl Fn(f64) -> f64,
    sensitivity: Option<&dyn Fn(f64) -> f64>,
    fluid: Option<&FluidGradient>,
) -> Result<DynamicPolicy> {
    let end = w_cont.max(p.knee);
    let n = opts.output_points;
    let grid: Vec<f64> = if end > 0.0 {
        (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
    } else {
        vec![0.0]
    };
    let mut k = Vec::with_capacity(grid.len());
    let mut g = Vec::with_capacity(grid.len());
    for &w in &grid {
        if w <= w_cont && w_cont > 0.0 {
            let gv = gradient(w);
            k.push(p.ctx.argmin(w, gv).0);
            g.push(gv);
        } else {
            k.push(p.fluid_k(w));
            g.push(match fluid {
                Some(f) => f.eval(v, w),
                None => p.closed_form(v, w),
            });
        }
    }
    let dgdv = sensitivity.map(|s| grid.iter().map(|&w| if w <= w_cont { s(w) } else { -1.0 / p.theta_hat }).collect());
    let table = ValueGradientTable {
        grid: grid.clone(),
        g,
        dgdv,
        v,
        k_of_w: k.clone(),
    };
    DynamicPolicy::new(grid, k, v, solver, w_cont, opts.eps, p.k_hat, p.m, p.m_e, Some(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_mu_grid, drift_from_mu, Family, ServiceRateCurve};

    // theta = 0.4, sigma^2 = 4, m = 1, c_s^2 = 4: admitting everything is optimal,
    // the workload is exponential with rate 0.2 and E[N] = E[W]/m_e = 2.
    fn constant_case() -> (DriftFunction, InputProcess) {
        let d = DriftFunction::constant(0.4, 4.0).unwrap();
        let inp = InputProcess::poisson(0.5, Family::DegenerateHyperexponential, 1.0, 4.0).unwrap();
        (d, inp)
    }

    // cost of the policy that admits everything below W and nothing above
    fn constant_case_cost(w: f64) -> f64 {
        2.0 + (0.6 * w + 3.0) * (-0.2 * w).exp()
    }

    fn quadratic_case(lambda: f64, cs2: f64) -> (DriftFunction, InputProcess) {
        let c = ServiceRateCurve::quadratic(1.25, 150.0).unwrap();
        let inp = InputProcess::poisson(lambda, Family::DegenerateHyperexponential, 1.0, cs2).unwrap();
        let d = drift_from_mu(&c, &inp, &default_mu_grid(&c)).unwrap();
        (d, inp)
    }

    #[test]
    fn fluid_gradient_is_affine_in_cost() {
        let (d, inp) = quadratic_case(0.8, 4.0);
        let fg = fluid_continuation_gradient(&d, &inp, &SolverOptions::default()).unwrap();
        for w in [0.0, 0.3, 2.0, 40.0] {
            let mid = fg.eval(3.0, w);
            let avg = 0.5 * (fg.eval(1.0, w) + fg.eval(5.0, w));
            assert!((mid - avg).abs() < 1e-9 * (1.0 + mid.abs()));
        }
        let (d, inp) = constant_case();
        let fg = fluid_continuation_gradient(&d, &inp, &SolverOptions::default()).unwrap();
        assert_eq!(fg.knee(), 0.0);
        assert!((fg.fluid_cost() - constant_case_cost(0.0)).abs() < 1e-12);
    }

    #[test]
    fn newton_at_fixed_continuation_point_matches_closed_form() {
        let (d, inp) = constant_case();
        let opts = SolverOptions::with_eps(1e-10);
        for w in [5.0, 20.0, 40.0] {
            let s = solve_newton(&d, &inp, w, &opts).unwrap();
            assert!((s.policy.v - constant_case_cost(w)).abs() < 1e-7, "W = {w}: {}", s.policy.v);
        }
    }

    #[test]
    fn constant_drift_optimum_from_both_solvers() {
        let (d, inp) = constant_case();
        let opts = SolverOptions::with_eps(1e-4);
        let bs = solve_binary_search(&d, &inp, &opts).unwrap();
        assert!((bs.upper - 2.0).abs() <= 1e-4, "{}", bs.upper);
        assert!(bs.upper - bs.lower < 1e-4);
        let nd = solve_with_doubling(&d, &inp, &opts).unwrap();
        assert!((nd.solution.policy.v - 2.0).abs() <= 1e-4);
        let ws: Vec<f64> = nd.ladder.iter().map(|r| r.w_cont).collect();
        assert_eq!(ws, vec![20.0, 40.0, 80.0, 160.0]);
        // admit everything
        let p = &nd.solution.policy;
        for (w, k) in p.w_grid.iter().zip(&p.k) {
            assert!((k - w / inp.m_e()).abs() < 1e-9);
        }
    }

    #[test]
    fn exponential_sizes_make_fluid_policy_optimal() {
        let (d, inp) = quadratic_case(0.8, 1.0);
        let opts = SolverOptions::with_eps(1e-6);
        let fg = fluid_continuation_gradient(&d, &inp, &opts).unwrap();
        let bs = solve_binary_search(&d, &inp, &opts).unwrap();
        assert!((bs.upper - fg.fluid_cost()).abs() <= 2e-6);
        let nt = solve_newton(&d, &inp, 40.0, &opts).unwrap();
        assert!((nt.policy.v - fg.fluid_cost()).abs() <= 2e-6);
    }

    #[test]
    fn halving_eps_costs_one_bisection() {
        let (d, inp) = quadratic_case(0.7, 4.0);
        let a = solve_binary_search(&d, &inp, &SolverOptions::with_eps(1e-4)).unwrap();
        let b = solve_binary_search(&d, &inp, &SolverOptions::with_eps(5e-5)).unwrap();
        assert_eq!(b.bisections, a.bisections + 1);
    }

    #[test]
    fn newton_iterates_decrease_to_binary_search_cost() {
        let (d, inp) = quadratic_case(0.8, 4.0);
        let opts = SolverOptions::with_eps(1e-5);
        let nd = solve_with_doubling(&d, &inp, &opts).unwrap();
        let it = nd.solution.iterates();
        assert!(it.windows(2).all(|p| p[1] <= p[0]), "{it:?}");
        let bs = solve_binary_search(&d, &inp, &opts).unwrap();
        assert!((bs.upper - nd.solution.policy.v).abs() <= 2e-5, "{} vs {}", bs.upper, nd.solution.policy.v);
        assert_eq!(nd.solution.policy.admissibility_violation(), 0.0);
    }

    #[test]
    fn feasibility_brackets_the_optimum() {
        let (d, inp) = constant_case();
        let opts = SolverOptions::default();
        assert!(matches!(test_feasibility(&d, &inp, 1.9, &opts).unwrap(), Feasibility::Infeasible { .. }));
        assert!(matches!(test_feasibility(&d, &inp, 2.1, &opts).unwrap(), Feasibility::Feasible { .. }));
        assert!(matches!(test_feasibility(&d, &inp, 5.5, &opts).unwrap(), Feasibility::FluidBelow));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (d, inp) = constant_case();
        assert!(solve_newton(&d, &inp, 0.0, &SolverOptions::default()).is_err());
        assert!(solve_binary_search(&d, &inp, &SolverOptions::with_eps(0.0)).is_err());
    }
}
