#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdlps_core::control::*;
use sdlps_core::sim::{simulate, SimOptions};
use sdlps_core::*;

/// A randomly drawn control instance with a concave rate curve that peaks and
/// then decreases.
pub struct Instance {
    pub seed: u64,
    pub curve: ServiceRateCurve,
    pub input: InputProcess,
    pub drift: DriftFunction,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak = rng.random_range(1.0..5.0);
    let top = rng.random_range(1.1..1.6);
    let curvature = rng.random_range(0.01..0.05);
    let rates: Vec<f64> = (1..=12)
        .map(|i| top - curvature * (i as f64 - peak).powi(2))
        .take_while(|&r| r > 0.05)
        .collect();
    let curve = ServiceRateCurve::new(rates).unwrap();
    let lambda = rng.random_range(0.5..0.92) * curve.max_rate();
    let cs2 = rng.random_range(1.5..12.0);
    let input = InputProcess::poisson(lambda, Family::DegenerateHyperexponential, 1.0, cs2).unwrap();
    let drift = drift_from_mu(&curve, &input, &default_mu_grid(&curve)).unwrap();
    Instance {
        seed,
        curve,
        input,
        drift,
    }
}

pub fn quadratic_instance(lambda: f64, cs2: f64) -> (ServiceRateCurve, InputProcess, DriftFunction) {
    let curve = ServiceRateCurve::quadratic(1.25, 150.0).unwrap();
    let input = InputProcess::poisson(lambda, Family::DegenerateHyperexponential, 1.0, cs2).unwrap();
    let drift = drift_from_mu(&curve, &input, &default_mu_grid(&curve)).unwrap();
    (curve, input, drift)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Structural properties of the solved control problem on one instance:
/// the feasibility and infeasibility detectors bracket the optimum, the
/// backward gradient at the origin decreases in the cost, the optimal gradient
/// is non-negative, the control is admissible, and simulation is seeded.
pub fn check_properties(inst: &Instance, sim_events: u64) -> Result<(), String> {
    let opts = SolverOptions::with_eps(1e-5);
    let (d, inp) = (&inst.drift, &inst.input);
    let bs = solve_binary_search(d, inp, &opts).map_err(|e| format!("binary search: {e}"))?;
    let v_star = bs.upper;
    let fluid = fluid_continuation_gradient(d, inp, &opts).map_err(|e| e.to_string())?;
    let v_f0 = fluid.fluid_cost();

    // infeasibility detector below the optimum
    let below = v_star - 20.0 * opts.eps;
    match test_feasibility(d, inp, below, &opts).map_err(|e| e.to_string())? {
        Feasibility::Infeasible { w_under } => ensure!(w_under > 0.0, "infeasible at w = {w_under}"),
        other => return Err(format!("v = {below} below v* = {v_star} judged {other:?}")),
    }
    // feasibility detector between the optimum and the fluid cost
    if v_f0 - v_star > 40.0 * opts.eps {
        let above = v_star + 0.5 * (v_f0 - v_star).min(1.0);
        match test_feasibility(d, inp, above, &opts).map_err(|e| e.to_string())? {
            Feasibility::Feasible { w_bar, .. } => ensure!(w_bar > 0.0, "feasible with W_bar = {w_bar}"),
            other => return Err(format!("v = {above} in (v*, v_f(0)) judged {other:?}")),
        }
    }
    // one step past the fluid cost the fluid gradient is already negative at 0
    ensure!(
        matches!(
            test_feasibility(d, inp, v_f0 + 0.1, &opts).map_err(|e| e.to_string())?,
            Feasibility::FluidBelow
        ),
        "v above v_f(0) not recognised as fluid-feasible"
    );

    // backward gradient at the origin strictly decreases in v
    let nd = solve_with_doubling(d, inp, &opts).map_err(|e| format!("newton: {e}"))?;
    let pol = &nd.solution.policy;
    let w = pol.w_cont;
    let vs = [v_star - 0.05, v_star - 0.01, v_star, v_star + 0.01, v_star + 0.05];
    let mut last = f64::INFINITY;
    for &v in &vs {
        let (g0, dg0) = newton_residual(d, inp, v, w, &opts).map_err(|e| e.to_string())?;
        ensure!(g0 < last, "G_v(0) not decreasing at v = {v}: {g0} >= {last}");
        ensure!(dg0 < 0.0, "dG/dv(0) = {dg0} at v = {v}");
        last = g0;
    }

    // non-negative optimal gradient: exact boundary value on the forward solve,
    // the Newton residual tolerance on the backward one
    let fwd = bs.policy.table.as_ref().ok_or("missing gradient table")?;
    let g_min = fwd.g.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(g_min >= -1e-8, "forward optimal gradient reaches {g_min}");
    let table = pol.table.as_ref().ok_or("missing gradient table")?;
    let g_min = table.g.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(g_min >= -opts.eps, "backward optimal gradient reaches {g_min}");
    if let Some(dg) = &table.dgdv {
        ensure!(dg.iter().all(|&x| x < 0.0), "sensitivity not negative everywhere");
    }
    for (&wi, &k) in pol.w_grid.iter().zip(&pol.k) {
        ensure!(k >= 0.0 && k <= wi / inp.m_e(), "k({wi}) = {k} outside [0, w/m_e]");
    }
    ensure!(
        (bs.upper - pol.v).abs() <= 2.0 * opts.eps + 1e-9,
        "solvers disagree: {} vs {}",
        bs.upper,
        pol.v
    );

    // seed determinism
    let sim = SimOptions {
        events: sim_events,
        seed: inst.seed,
        ..SimOptions::default()
    };
    let policy = ControlPolicy::from(pol);
    let a = simulate(&inst.curve, inp, &policy, &sim).map_err(|e| e.to_string())?;
    let b = simulate(&inst.curve, inp, &policy, &sim).map_err(|e| e.to_string())?;
    ensure!(a == b, "simulation not reproducible for seed {}", inst.seed);
    ensure!(a.admissions_max_arrival <= 1 && a.admissions_max_departure <= 2, "admission caps violated");
    Ok(())
}
