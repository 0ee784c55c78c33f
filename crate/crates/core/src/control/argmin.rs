//! Pointwise minimization over the admissible concurrency interval.

use crate::model::{DriftFunction, InputProcess};

pub const DEFAULT_ARGMIN_POINTS: usize = 512;

/// Precomputed constants of the objective `k (1 - m_e/m) - theta(k) G`.
#[derive(Clone, Debug)]
pub struct ArgminContext<'a> {
    pub drift: &'a DriftFunction,
    pub m: f64,
    pub m_e: f64,
    /// `1 - m_e/m`.
    pub slope: f64,
    pub points: usize,
}

impl<'a> ArgminContext<'a> {
    pub fn new(drift: &'a DriftFunction, input: &InputProcess, points: usize) -> Self {
        let (m, m_e) = (input.m(), input.m_e());
        Self {
            drift,
            m,
            m_e,
            slope: 1.0 - m_e / m,
            points: points.max(2),
        }
    }

    #[inline]
    fn objective(&self, k: f64, g: f64) -> f64 {
        k * self.slope - self.drift.eval(k) * g
    }

    /// Minimizer and minimum of the objective over `[0, w/m_e]`.
    ///
    /// Dense scan plus both endpoints, then a golden-section polish in the best
    /// cell that is kept only if it strictly improves. Ties go to the smaller k.
    /// Past the drift table theta is constant, so the objective is linear there
    /// and only the right endpoint can beat the scanned range.
    pub fn argmin(&self, w: f64, g: f64) -> (f64, f64) {
        let x = (w / self.m_e).max(0.0);
        if x == 0.0 {
            return (0.0, self.objective(0.0, g));
        }
        let span = x.min(self.drift.grid_end());
        let n = self.points;
        let h = span / (n - 1) as f64;
        let mut best_i = 0usize;
        let mut best = self.objective(0.0, g);
        for i in 1..n {
            let k = if i == n - 1 { span } else { i as f64 * h };
            let v = self.objective(k, g);
            if improves(v, best) {
                best = v;
                best_i = i;
            }
        }
        let mut best_k = if best_i == n - 1 { span } else { best_i as f64 * h };
        if x > span {
            let v = self.objective(x, g);
            if improves(v, best) {
                return (x, v);
            }
        }
        let lo = best_i.saturating_sub(1) as f64 * h;
        let hi = ((best_i + 1).min(n - 1) as f64 * h).min(span);
        if hi > lo {
            let (k, v) = self.golden(lo, hi, g);
            if improves(v, best) {
                best = v;
                best_k = k;
            }
        }
        (best_k, best)
    }

    fn golden(&self, mut a: f64, mut b: f64, g: f64) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (self.objective(c, g), self.objective(d, g));
        while (b - a) > 1e-12 * (1.0 + b.abs()) {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.objective(c, g);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.objective(d, g);
            }
        }
        if fc <= fd {
            (c, fc)
        } else {
            (d, fd)
        }
    }
}

// Rounding-level differences count as ties so flat objectives pick the smaller k.
#[inline]
fn improves(v: f64, best: f64) -> bool {
    v < best - 1e-13 * (1.0 + best.abs())
}

/// `argmin_{k ∈ [0, w/m_e]} { k (1 - m_e/m) - theta(k) G }` with its value.
pub fn inner_argmin(w: f64, g: f64, drift: &DriftFunction, input: &InputProcess) -> (f64, f64) {
    ArgminContext::new(drift, input, DEFAULT_ARGMIN_POINTS).argmin(w, g)
}

/// Fluid policy `argmax_{x ≤ w/m_e} theta(x)`.
pub fn fluid_policy(w: f64, drift: &DriftFunction, m_e: f64) -> f64 {
    drift.constrained_argmax((w / m_e).max(0.0))
}
