//! Exit criteria. Prints one PASS/FAIL line per criterion and exits non-zero
//! when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use statrs::function::erf::erf;

use common::{check_properties, quadratic_instance, random_instance};
use sdlps_core::control::*;
use sdlps_core::rbm::*;
use sdlps_core::sim::*;
use sdlps_core::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn eq1_curve() -> ServiceRateCurve {
    ServiceRateCurve::new(vec![1.0, 1.5, 1.25, 1.0, 0.75]).unwrap()
}

fn exponent_one_exactness() -> Outcome {
    let curve = eq1_curve();
    let input = InputProcess::markovian(0.9, 1.0).map_err(err)?;
    let mut worst = 0.0f64;
    for k in 1..=5 {
        match birth_death_pi(&curve, &input, k, DEFAULT_TAIL_TOL) {
            Ok(pi) => {
                let approx = static_mean_numjobs(&pi, &input).map_err(err)?;
                let gap = (approx - pi.mean()).abs();
                ensure!(gap <= 1e-9, "K={k}: {approx} vs birth-death {}", pi.mean());
                worst = worst.max(gap);
            }
            // mu(5) = 0.75 < 0.9: no stationary law exists
            Err(Error::Unstable { .. }) if curve.rate(k) <= input.load() => {}
            Err(e) => return Err(format!("K={k}: {e}")),
        }
    }
    Ok(format!("max gap {worst:.1e} for K=1..4; K=5 rejected as unstable"))
}

fn rbm_oracles() -> Outcome {
    let grid = workload_grid(100.0, DEFAULT_POINTS, &[]).map_err(err)?;
    let law = rbm_stationary(|_| 0.25, |_| 2.0, &grid).map_err(err)?;
    let sup_exp = law
        .rows()
        .map(|(w, c, _)| (c - (1.0 - (-0.25 * w).exp())).abs())
        .fold(0.0, f64::max);
    ensure!(sup_exp <= 1e-8, "exponential sup-norm {sup_exp:e}");
    let grid = workload_grid(6.0, DEFAULT_POINTS, &[]).map_err(err)?;
    let law = rbm_stationary(|w| w, |_| 1.0, &grid).map_err(err)?;
    let sup_erf = law.rows().map(|(w, c, _)| (c - erf(w)).abs()).fold(0.0, f64::max);
    ensure!(sup_erf <= 1e-6, "erf sup-norm {sup_erf:e}");
    Ok(format!("sup-norm {sup_exp:.1e} (exponential), {sup_erf:.1e} (erf)"))
}

fn two_route_workload_law() -> Outcome {
    let (curve, input, _) = quadratic_instance(0.8, 19.0);
    let k = 5;
    let pi = birth_death_pi(&curve, &input, k, DEFAULT_TAIL_TOL).map_err(err)?;
    let grid = default_workload_grid(&pi, &input).map_err(err)?;
    let direct = static_workload_cdf(&pi, &input, &grid).map_err(err)?;
    let drift = drift_from_pi(&pi, &input, &default_pi_grid(&pi)).map_err(err)?;
    let s2 = input.sigma2();
    let kf = k as f64;
    let via = rbm_stationary(
        |w| drift.eval(delta_map(w, kf, &input).unwrap().min(kf)),
        |_| s2,
        &grid,
    )
    .map_err(err)?;
    let sup = direct
        .cdf()
        .iter()
        .zip(via.cdf())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(sup <= 1e-3, "sup-norm {sup:e}");
    Ok(format!("sup-norm {sup:.2e} over {} points", grid.len()))
}

fn simulator_oracles() -> Outcome {
    let curve = ServiceRateCurve::new(vec![1.0]).map_err(err)?;
    let input = InputProcess::markovian(0.5, 1.0).map_err(err)?;
    let opts = SimOptions {
        events: 10_000_000,
        seed: 20_240_501,
        ..SimOptions::default()
    };
    let mm1 = simulate(&curve, &input, &ControlPolicy::Static(1), &opts).map_err(err)?;
    ensure!(
        (mm1.e_n - 1.0).abs() <= mm1.ci_n,
        "M/M/1 E[N] = {:.4} ± {:.4} misses 1.0",
        mm1.e_n,
        mm1.ci_n
    );

    // headcount law under static K with exponential sizes; sampling far apart
    // compared to the relaxation time keeps the samples close to independent
    let curve = eq1_curve();
    let input = InputProcess::markovian(0.6, 1.0).map_err(err)?;
    let k = 2;
    let pi = birth_death_pi(&curve, &input, k, DEFAULT_TAIL_TOL).map_err(err)?;
    let opts = SimOptions {
        events: 10_000_000,
        seed: 77,
        sample_spacing: Some(25.0),
        ..SimOptions::default()
    };
    let run = simulate(&curve, &input, &ControlPolicy::Static(k), &opts).map_err(err)?;
    let chi = headcount_chi_square(&run.headcount_samples, pi.pi(), 5.0).map_err(err)?;
    ensure!(chi.p_value > 0.01, "chi-square {:.2} on {} dof, p = {:.4}", chi.statistic, chi.dof, chi.p_value);
    Ok(format!(
        "M/M/1 E[N] = {:.4} ± {:.4}; chi-square {:.1} on {} dof, p = {:.3}",
        mm1.e_n, mm1.ci_n, chi.statistic, chi.dof, chi.p_value
    ))
}

fn constant_drift_optimum() -> Outcome {
    let drift = DriftFunction::constant(0.4, 4.0).map_err(err)?;
    let input = InputProcess::poisson(0.5, Family::DegenerateHyperexponential, 1.0, 4.0).map_err(err)?;
    let opts = SolverOptions::with_eps(1e-4);
    let bs = solve_binary_search(&drift, &input, &opts).map_err(err)?;
    let nd = solve_with_doubling(&drift, &input, &opts).map_err(err)?;
    let (vb, vn) = (bs.upper, nd.solution.policy.v);
    ensure!((vb - 2.0).abs() <= 1e-4, "binary search v = {vb}");
    ensure!((vn - 2.0).abs() <= 1e-4, "Newton v = {vn}");
    Ok(format!("binary search {vb:.6}, Newton {vn:.6}"))
}

fn solver_agreement() -> Outcome {
    let eps = 1e-5;
    let opts = SolverOptions::with_eps(eps);
    let mut worst = 0.0f64;
    for cs2 in [4.0, 19.0] {
        for lambda in [0.7, 0.8] {
            let (_, input, drift) = quadratic_instance(lambda, cs2);
            let vb = solve_binary_search(&drift, &input, &opts).map_err(err)?.upper;
            let vn = solve_with_doubling(&drift, &input, &opts).map_err(err)?.solution.policy.v;
            ensure!(
                (vb - vn).abs() <= 2.0 * eps,
                "lambda {lambda}, c_s^2 {cs2}: binary {vb} vs Newton {vn}"
            );
            worst = worst.max((vb - vn).abs());
        }
    }
    Ok(format!("max |v_binary - v_newton| = {worst:.2e}"))
}

fn newton_convergence_shape() -> Outcome {
    let (_, input, drift) = quadratic_instance(0.8, 4.0);
    let nd = solve_with_doubling(&drift, &input, &SolverOptions::with_eps(1e-5)).map_err(err)?;
    let iterates = nd.solution.iterates();
    let v_final = *iterates.last().unwrap();
    let errors: Vec<f64> = iterates.iter().map(|v| v - v_final).collect();
    ensure!(
        errors.windows(2).all(|e| e[1] < e[0]),
        "errors not strictly decreasing: {errors:?}"
    );
    ensure!(errors.len() >= 4, "only {} iterates, need three ratios", errors.len());
    let ratios: Vec<f64> = errors.windows(2).map(|e| e[1] / e[0]).collect();
    let last3 = &ratios[ratios.len() - 3..];
    ensure!(last3.windows(2).all(|r| r[1] < r[0]), "ratios not decreasing: {last3:?}");
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    Ok(format!("errors [{}], last ratios [{}]", fmt(&errors), fmt(last3)))
}

// Diffusion-control column for (lambda, c_s^2), Poisson arrivals and H* sizes.
const TABLE: [(f64, f64, f64); 6] = [
    (0.7, 4.0, 1.744),
    (0.8, 4.0, 2.885),
    (0.9, 4.0, 4.893),
    (0.7, 19.0, 2.94),
    (0.8, 19.0, 6.63),
    (0.9, 19.0, 14.33),
];

fn dynamic_policy_reproduction() -> Outcome {
    let opts = SolverOptions::with_eps(1e-5);
    let sim = SimOptions {
        events: 5_000_000,
        seed: 1_744,
        ..SimOptions::default()
    };
    let mut cells = Vec::new();
    let mut misses = Vec::new();
    for &(lambda, cs2, target) in &TABLE {
        let (curve, input, drift) = quadratic_instance(lambda, cs2);
        let nd = solve_with_doubling(&drift, &input, &opts).map_err(err)?;
        let policy = ControlPolicy::from(&nd.solution.policy);
        let r = simulate(&curve, &input, &policy, &sim).map_err(err)?;
        let rel = r.e_n / target - 1.0;
        cells.push(format!("{lambda}/{cs2}: {:.3} ({:+.1}%)", r.e_n, 100.0 * rel));
        if rel.abs() > 0.05 {
            misses.push(format!("lambda {lambda}, c_s^2 {cs2}: {:.3} vs {target}", r.e_n));
        }
    }
    ensure!(misses.is_empty(), "outside 5%: {}", misses.join("; "));
    Ok(cells.join(", "))
}

fn static_optimum_agreement() -> Outcome {
    let sim = SimOptions {
        events: 10_000_000,
        seed: 2_019,
        ..SimOptions::default()
    };
    let mut cells = Vec::new();
    for lambda in [0.7, 0.8, 0.9] {
        let (curve, input, _) = quadratic_instance(lambda, 19.0);
        let ks: Vec<usize> = (1..=13).filter(|&k| curve.rate(k) > input.load()).collect();
        let approx = approx_mean_by_k(&curve, &input, ks.iter().copied());
        let k_approx = approx_argmin_k(&approx).ok_or("no stable level")?;
        let rows = sweep_static_k(&curve, &input, &ks, &sim).map_err(err)?;
        let (k_sim, _) = rows
            .iter()
            .filter(|(_, r)| !r.unstable)
            .min_by(|a, b| a.1.e_n.total_cmp(&b.1.e_n))
            .ok_or("no simulated level")?;
        ensure!(
            k_approx.abs_diff(*k_sim) <= 1,
            "lambda {lambda}: approximation K = {k_approx}, simulation K = {k_sim}"
        );
        cells.push(format!("lambda {lambda}: K {k_approx} vs {k_sim}"));
    }
    Ok(cells.join(", "))
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..50 {
        let inst = random_instance(seed);
        if let Err(e) = check_properties(&inst, 20_000) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    ensure!(failures.is_empty(), "{} of 50 seeds failed: {}", failures.len(), failures.join("; "));
    Ok("50 random curves".into())
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria = [
        Criterion {
            name: "exponent-one exactness",
            limit: Duration::from_secs(1),
            run: exponent_one_exactness,
        },
        Criterion {
            name: "RBM stationary law oracles",
            limit: Duration::from_secs(1),
            run: rbm_oracles,
        },
        Criterion {
            name: "static workload law, two routes",
            limit: Duration::from_secs(5),
            run: two_route_workload_law,
        },
        Criterion {
            name: "simulator oracles",
            limit: Duration::from_secs(60),
            run: simulator_oracles,
        },
        Criterion {
            name: "constant-drift optimum",
            limit: Duration::from_secs(10),
            run: constant_drift_optimum,
        },
        Criterion {
            name: "binary search vs Newton",
            limit: Duration::from_secs(120),
            run: solver_agreement,
        },
        Criterion {
            name: "Newton convergence shape",
            limit: Duration::from_secs(10),
            run: newton_convergence_shape,
        },
        Criterion {
            name: "dynamic policy mean headcount",
            limit: Duration::from_secs(15 * 60),
            run: dynamic_policy_reproduction,
        },
        Criterion {
            name: "optimal static level",
            limit: Duration::from_secs(20 * 60),
            run: static_optimum_agreement,
        },
        Criterion {
            name: "control property suites",
            limit: Duration::from_secs(5 * 60),
            run: property_suites,
        },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; took {elapsed:.1?}, limit {:?}", c.limit)),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {detail} [{elapsed:.2?}]", i + 1, c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {}: {reason} [{elapsed:.2?}]", i + 1, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
