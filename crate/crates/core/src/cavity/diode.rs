use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smooth asymmetric rectifier at each output port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams<T> {
    /// Reverse-bias slope, `0 <= alpha < 1`; `alpha = 1` is accepted as the
    /// linear (bypassed) limit.
    pub alpha: T,
    /// Width of the soft knee, volts.
    pub epsilon: T,
}

impl<T: Scalar> DiodeParams<T> {
    pub fn new(alpha: T, epsilon: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::invalid(format!(
                "diode alpha must be in [0, 1], got {alpha}"
            )));
        }
        if !(epsilon > T::zero() && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "diode epsilon must be > 0, got {epsilon}"
            )));
        }
        Ok(Self { alpha, epsilon })
    }

    /// Diode with a unit linear response.
    pub fn bypass() -> Self {
        Self {
            alpha: T::one(),
            epsilon: T::one(),
        }
    }
}

#[inline]
fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// `g(v) = (1 - alpha) eps softplus(v / eps) + alpha v - g(0)`.
///
/// Tends to `v` for `v >> eps` and to `alpha v` for `v << -eps`, with
/// `g(0) = 0`. The slope lies in `[alpha, 1]`.
#[inline]
pub fn diode<T: Scalar>(v: T, p: &DiodeParams<T>) -> T {
    let one = T::one();
    if p.alpha == one {
        return v;
    }
    let scale = (one - p.alpha) * p.epsilon;
    scale * (softplus(v / p.epsilon) - T::LN_2()) + p.alpha * v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DiodeParams<f64> {
        DiodeParams::new(0.1, 0.01).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(diode(0.0, &params()), 0.0);
    }

    #[test]
    fn asymptotes() {
        let p = params();
        // Large forward bias: v minus the constant offset (1 - alpha) eps ln 2.
        let off = 0.9 * 0.01 * std::f64::consts::LN_2;
        assert!((diode(10.0, &p) - (10.0 - off)).abs() < 1e-12);
        assert!((diode(-10.0, &p) - (-1.0 - off)).abs() < 1e-12);
    }

    #[test]
    fn breaks_odd_symmetry() {
        let p = params();
        let e = p.epsilon;
        assert!((diode(5.0 * e, &p) + diode(-5.0 * e, &p)).abs() > 1e-3);
    }

    #[test]
    fn bypass_is_identity() {
        let p = DiodeParams::<f64>::bypass();
        assert_eq!(diode(-3.25, &p), -3.25);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DiodeParams::new(-0.1f64, 1.0).is_err());
        assert!(DiodeParams::new(0.1f64, 0.0).is_err());
    }
}
