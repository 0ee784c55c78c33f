mod common;

use common::{check_properties, quadratic_instance, random_instance};
use sdlps_core::control::*;
use sdlps_core::*;

#[test]
fn fluid_gradient_is_continuous_at_the_knee() {
    let c = ServiceRateCurve::new(vec![1.0, 1.5, 1.25, 1.0, 0.75]).unwrap();
    let inp = InputProcess::poisson(0.9, Family::DegenerateHyperexponential, 1.0, 4.0).unwrap();
    let d = drift_from_mu(&c, &inp, &default_mu_grid(&c)).unwrap();
    let fg = fluid_continuation_gradient(&d, &inp, &SolverOptions::default()).unwrap();
    assert_eq!(fg.knee(), 2.0 * inp.m_e());
    for v in [1.0, 4.0] {
        let left = fg.eval(v, fg.knee() * (1.0 - 1e-9));
        let right = fg.eval(v, fg.knee());
        assert!((left - right).abs() < 1e-6, "{left} vs {right}");
    }
    // zero gradient at the origin exactly at the fluid cost
    assert!(fg.at_zero(fg.fluid_cost()).abs() < 1e-12);
    let diff = fg.at_zero(2.0) - fg.at_zero(3.0);
    assert!((diff - (fg.at_zero(7.0) - fg.at_zero(8.0))).abs() < 1e-9);
    assert!(diff > 0.0);
}

#[test]
fn exponential_sizes_converge_at_initialisation() {
    let (_, inp, d) = quadratic_instance(0.8, 1.0);
    let s = solve_newton(&d, &inp, 40.0, &SolverOptions::with_eps(1e-6)).unwrap();
    assert_eq!(s.trace.len(), 1, "{:?}", s.trace);
    assert!((s.policy.v - s.v0).abs() < 1e-6);
}

#[test]
fn forward_and_backward_gradients_agree() {
    let (_, inp, d) = quadratic_instance(0.8, 4.0);
    let opts = SolverOptions::with_eps(1e-9);
    let w = initial_continuation_point(&d, &inp);
    let s = solve_newton(&d, &inp, w, &opts).unwrap();
    let table = s.policy.table.as_ref().unwrap();
    let v = s.trace.last().unwrap().v;
    let (g0, _) = newton_residual(&d, &inp, v, w, &opts).unwrap();
    let fwd = forward_gradient(&d, &inp, v, g0, w, &opts).unwrap();
    let (_, [g_w]) = fwd.last();
    let g_back = *table.g.last().unwrap();
    assert!((g_w - g_back).abs() <= 1e-6 * (1.0 + g_back.abs()), "{g_w} vs {g_back}");
}

#[test]
fn doubling_costs_settle_monotonically() {
    let (_, inp, d) = quadratic_instance(0.7, 19.0);
    let eps = 1e-5;
    let nd = solve_with_doubling(&d, &inp, &SolverOptions::with_eps(eps)).unwrap();
    assert!(nd.ladder.len() >= 2);
    for pair in nd.ladder.windows(2) {
        assert_eq!(pair[1].w_cont, 2.0 * pair[0].w_cont);
        assert!(pair[1].v <= pair[0].v + eps);
    }
    // huge continuation point: the first rung already agrees with the second
    let s = solve_newton(&d, &inp, 2560.0, &SolverOptions::with_eps(eps)).unwrap();
    assert!((s.policy.v - nd.solution.policy.v).abs() <= 2.0 * eps);
}

#[test]
fn policy_follows_fluid_control_past_continuation_point() {
    let (_, inp, d) = quadratic_instance(0.9, 4.0);
    let nd = solve_with_doubling(&d, &inp, &SolverOptions::with_eps(1e-5)).unwrap();
    let p = &nd.solution.policy;
    assert_eq!(p.k_at(p.w_cont * 1.5), fluid_policy(p.w_cont * 1.5, &d, inp.m_e()));
    let rounded = discretize_policy(p);
    assert_eq!(rounded.lookup(1e6), round_up(d.k_hat()));
}

#[test]
fn solved_policy_round_trips_through_toml() {
    let (_, inp, d) = quadratic_instance(0.8, 19.0);
    let nd = solve_with_doubling(&d, &inp, &SolverOptions::with_eps(1e-5)).unwrap();
    let p = &nd.solution.policy;
    let text = p.to_toml(&inp, d.provenance(), None).unwrap();
    let q = DynamicPolicy::from_toml(&text).unwrap();
    assert_eq!(q.k_tilde, p.k_tilde);
    assert_eq!(discretize_policy(&q), discretize_policy(p));
}

#[test]
fn properties_hold_on_random_curves() {
    for seed in 0..4 {
        let inst = random_instance(seed);
        check_properties(&inst, 20_000).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}
