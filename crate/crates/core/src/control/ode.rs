//! Adaptive Dormand–Prince 5(4) integrator with terminal events and cubic
//! Hermite dense output.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
    /// Width to which terminal events are localized.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            event_tol: 1e-10,
        }
    }
}

/// Accepted steps `(t, y, y')`, in integration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }

    pub fn first(&self) -> (f64, [f64; N]) {
        (self.t[0], self.y[0])
    }

    /// Cubic Hermite interpolation between accepted steps; clamped to the
    /// covered range.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let forward = self.t[n - 1] > self.t[0];
        // index i with t between t[i] and t[i+1]
        let i = if forward {
            self.t.partition_point(|&s| s <= t)
        } else {
            self.t.partition_point(|&s| s >= t)
        }
        .clamp(1, n - 1)
            - 1;
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        std::array::from_fn(|k| {
            h00 * self.y[i][k] + h10 * h * self.dy[i][k] + h01 * self.y[i + 1][k] + h11 * h * self.dy[i + 1][k]
        })
    }
}

/// Outcome of an integration run.
#[derive(Clone, Debug)]
pub struct OdeOutcome<const N: usize> {
    pub trajectory: Trajectory<N>,
    /// Event index and location, when a terminal event stopped the run.
    pub event: Option<(usize, f64)>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights equal the last row of A (first-same-as-last)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Step<const N: usize> {
    y: [f64; N],
    dy: [f64; N],
    err: f64,
}

fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], dy0: &[f64; N], h: f64, opts: &OdeOptions) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = *dy0;
    for s in 1..7 {
        let ys: [f64; N] = std::array::from_fn(|j| y[j] + h * (0..s).map(|r| A[s][r] * k[r][j]).sum::<f64>());
        k[s] = f(t + C[s] * h, &ys);
        if s == 6 {
            let err = (0..N)
                .map(|j| {
                    let e = h * (0..7).map(|r| E[r] * k[r][j]).sum::<f64>();
                    let scale = opts.atol + opts.rtol * y[j].abs().max(ys[j].abs());
                    (e / scale).powi(2)
                })
                .sum::<f64>();
            let err = (err / N as f64).sqrt();
            return Step { y: ys, dy: k[6], err };
        }
    }
    unreachable!()
}

fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &[f64; N], dy0: &[f64; N], dir: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let scale: [f64; N] = std::array::from_fn(|j| opts.atol + opts.rtol * y0[j].abs());
    let norm = |v: &[f64; N]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let (d0, d1) = (norm(y0), norm(dy0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: [f64; N] = std::array::from_fn(|j| y0[j] + dir * h0 * dy0[j]);
    let f1 = f(t0 + dir * h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|j| f1[j] - dy0[j]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `events(t, y)` returns the index of a terminal condition that holds at
/// `(t, y)`, if any. It is checked at the start and after every accepted step;
/// when it first holds at the end of a step, the step size is bisected until
/// the first point where it holds is bracketed within `event_tol`.
pub fn integrate<const N: usize, F, Ev>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut events: Ev,
) -> Result<OdeOutcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    Ev: FnMut(f64, &[f64; N]) -> Option<usize>,
{
    let dy0 = f(t0, &y0);
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        dy: vec![dy0],
    };
    if let Some(e) = events(t0, &y0) {
        return Ok(OdeOutcome {
            trajectory: traj,
            event: Some((e, t0)),
        });
    }
    if t_end == t0 {
        return Ok(OdeOutcome {
            trajectory: traj,
            event: None,
        });
    }
    let dir = (t_end - t0).signum();
    let (mut t, mut y, mut dy) = (t0, y0, dy0);
    let mut h = initial_step(&mut f, t0, &y0, &dy0, dir, opts);
    let mut steps = 0usize;
    let mut rejected_last = false;

    loop {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            break;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!(
                "ODE integration exceeded {} steps at t = {t}",
                opts.max_steps
            )));
        }
        h = h.min(opts.h_max).min(remaining);
        let last = h >= remaining;
        let step = dp_step(&mut f, t, &y, &dy, dir * h, opts);
        if !step.err.is_finite() || step.y.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            rejected_last = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Numerical(format!("non-finite ODE state near t = {t}")));
            }
            continue;
        }
        if step.err <= 1.0 {
            let t_new = if last { t_end } else { t + dir * h };
            if let Some(e) = events(t_new, &step.y) {
                let (te, ye, dye, idx) = locate_event(&mut f, &mut events, t, &y, &dy, dir * h, e, opts);
                traj.t.push(te);
                traj.y.push(ye);
                traj.dy.push(dye);
                return Ok(OdeOutcome {
                    trajectory: traj,
                    event: Some((idx, te)),
                });
            }
            t = t_new;
            y = step.y;
            dy = step.dy;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(dy);
            let grow = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= if rejected_last { grow.min(1.0) } else { grow };
            rejected_last = false;
            if last {
                break;
            }
        } else {
            h *= (0.9 * step.err.powf(-0.2)).clamp(0.2, 1.0);
            rejected_last = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Numerical(format!("ODE step size underflow at t = {t}")));
            }
        }
    }
    Ok(OdeOutcome {
        trajectory: traj,
        event: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn locate_event<const N: usize, F, Ev>(
    f: &mut F,
    events: &mut Ev,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    hit: usize,
    opts: &OdeOptions,
) -> (f64, [f64; N], [f64; N], usize)
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    Ev: FnMut(f64, &[f64; N]) -> Option<usize>,
{
    // events() is false at fraction 0 and true at fraction 1
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = {
        let s = dp_step(f, t, y, dy, h, opts);
        (t + h, s.y, s.dy, hit)
    };
    while (hi - lo) * h.abs() > opts.event_tol {
        let mid = 0.5 * (lo + hi);
        let s = dp_step(f, t, y, dy, mid * h, opts);
        match events(t + mid * h, &s.y) {
            Some(e) => {
                hi = mid;
                best = (t + mid * h, s.y, s.dy, e);
            }
            None => lo = mid,
        }
    }
    best
}
