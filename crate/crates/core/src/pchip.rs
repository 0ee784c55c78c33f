//! Shape-preserving monotone piecewise-cubic Hermite interpolation.
//!
//! Interior knot slopes use the Fritsch–Butland weighted harmonic mean, so the
//! interpolant is monotone on every interval where the data are monotone and
//! never overshoots a local extremum of the data. Endpoint slopes use the
//! one-sided three-point formula with the usual sign and magnitude limits.
//! Outside the knot range the interpolant continues linearly with the end
//! slope; callers that need a different extension clamp before evaluating.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    // (x0, 1/h) when the knots are uniformly spaced
    uniform: Option<(f64, f64)>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::param(
                "knots",
                format!("need >= 2 knots with matching values (got {} and {})", n, y.len()),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("knots", "knots and values must be finite"));
        }
        let mut h = Vec::with_capacity(n - 1);
        let mut delta = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let hi = x[i + 1] - x[i];
            if hi <= 0.0 {
                return Err(Error::param("knots", "knots must be strictly increasing"));
            }
            h.push(hi);
            delta.push((y[i + 1] - y[i]) / hi);
        }

        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
                d[k] = 0.0;
            } else if s1 == s2 {
                d[k] = s1;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }

        let span = x[n - 1] - x[0];
        let step = span / (n - 1) as f64;
        let is_uniform = h.iter().all(|&hi| (hi - step).abs() <= 1e-12 * span.max(1.0));
        let uniform = is_uniform.then(|| (x[0], 1.0 / step));

        Ok(Self { x, y, d, uniform })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.uniform {
            Some((x0, inv_h)) => {
                let i = ((t - x0) * inv_h).floor();
                let i = if i.is_nan() || i < 0.0 { 0 } else { i as usize };
                let mut i = i.min(n - 2);
                // guard against rounding at knot boundaries
                if t < self.x[i] && i > 0 {
                    i -= 1;
                } else if t >= self.x[i + 1] && i + 2 < n {
                    i += 1;
                }
                i
            }
            None => self.x.partition_point(|&xi| xi <= t).saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.d[0];
        }
        if t >= self.x[n - 1] {
            return self.d[n - 1];
        }
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
