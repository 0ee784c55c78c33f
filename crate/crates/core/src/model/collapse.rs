//! Workload/headcount bijection under a concurrency level `K`.

use super::input::InputProcess;
use crate::error::{Error, Result};

/// `(w ∧ K m_e)/m_e + (w − K m_e)⁺/m`.
pub fn delta_map(w: f64, k: f64, input: &InputProcess) -> Result<f64> {
    check(w, "w")?;
    check(k, "K")?;
    Ok(delta_raw(w, k, input.m_e(), input.m()))
}

/// `(x ∧ K) m_e + (x − K)⁺ m`.
pub fn delta_inverse(x: f64, k: f64, input: &InputProcess) -> Result<f64> {
    check(x, "x")?;
    check(k, "K")?;
    Ok(delta_inverse_raw(x, k, input.m_e(), input.m()))
}

#[inline]
pub(crate) fn delta_raw(w: f64, k: f64, m_e: f64, m: f64) -> f64 {
    let knee = k * m_e;
    if w <= knee {
        w / m_e
    } else {
        k + (w - knee) / m
    }
}

#[inline]
pub(crate) fn delta_inverse_raw(x: f64, k: f64, m_e: f64, m: f64) -> f64 {
    if x <= k {
        x * m_e
    } else {
        k * m_e + (x - k) * m
    }
}

fn check(v: f64, name: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;
    use proptest::prelude::*;

    fn input(cs2: f64) -> InputProcess {
        InputProcess::poisson(0.5, Family::DegenerateHyperexponential, 1.0, cs2).unwrap()
    }

    #[test]
    fn hand_values() {
        let inp = input(19.0);
        assert_eq!(delta_map(150.0, 10.0, &inp).unwrap(), 60.0);
        assert_eq!(delta_map(50.0, 10.0, &inp).unwrap(), 5.0);
        assert!(delta_map(-1.0, 1.0, &inp).is_err());
        assert!(delta_inverse(1.0, -1.0, &inp).is_err());
    }

    #[test]
    fn round_trip_listed_points() {
        let inp = input(4.0);
        let k = 3.0;
        let knee = k * inp.m_e();
        for w in [0.0, 3.7, knee, knee + 8.0] {
            let x = delta_map(w, k, &inp).unwrap();
            assert!((delta_inverse(x, k, &inp).unwrap() - w).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn inverse_and_lipschitz(cs2 in 1.0f64..30.0, k in 0.0f64..15.0, u in 0.0f64..1.0, du in 0.0f64..1.0) {
            let inp = input(cs2);
            let span = (10.0 * k * inp.m_e()).max(1.0);
            let w = u * span;
            let w2 = w + du;
            let x = delta_map(w, k, &inp).unwrap();
            let x2 = delta_map(w2, k, &inp).unwrap();
            prop_assert!((delta_inverse(x, k, &inp).unwrap() - w).abs() <= 1e-12 * span.max(1.0));
            prop_assert!(x2 >= x);
            let lip = 1.0 / inp.m().min(inp.m_e());
            prop_assert!(x2 - x <= lip * du * (1.0 + 1e-12) + 1e-13 * x2.max(1.0));
        }
    }
}
