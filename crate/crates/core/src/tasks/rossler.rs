use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Dominant period of the x-component for a = 0.5, b = 2.1, c = 3.5, in
/// native time units, as measured by [`estimate_t_osc`](super::estimate_t_osc).
pub const NOMINAL_T_OSC: f64 = 6.33;

/// Integration steps per dominant period used for the default step size.
pub const STEPS_PER_T_OSC: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RosslerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dt: f64,
    pub initial: [f64; 3],
    /// Steps integrated and discarded before the first emitted sample.
    pub transient_steps: usize,
}

impl Default for RosslerParams {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 2.1,
            c: 3.5,
            dt: NOMINAL_T_OSC / STEPS_PER_T_OSC as f64,
            initial: [1.0, 1.0, 1.0],
            transient_steps: 50 * STEPS_PER_T_OSC,
        }
    }
}

impl RosslerParams {
    pub fn derivative<T: Scalar>(&self, s: [T; 3]) -> [T; 3] {
        let (a, b, c) = (T::lit(self.a), T::lit(self.b), T::lit(self.c));
        let [x, y, z] = s;
        [-y - z, x + a * y, b + z * (x - c)]
    }

    pub fn rk4_step<T: Scalar>(&self, s: [T; 3], h: T) -> [T; 3] {
        let half = h * T::lit(0.5);
        let add = |s: [T; 3], k: [T; 3], w: T| [s[0] + w * k[0], s[1] + w * k[1], s[2] + w * k[2]];
        let k1 = self.derivative(s);
        let k2 = self.derivative(add(s, k1, half));
        let k3 = self.derivative(add(s, k2, half));
        let k4 = self.derivative(add(s, k3, h));
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        std::array::from_fn(|i| s[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
    }
}

/// Integrates the Rössler flow with classical RK4, emitting `n_steps`
/// samples of (x, y, z) spaced `params.dt` apart after the transient.
pub fn rossler_trajectory<T: Scalar>(
    params: &RosslerParams,
    n_steps: usize,
) -> Result<TimeSeries<T>> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    if !(params.dt > 0.0 && params.dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be > 0, got {}", params.dt)));
    }
    let h = T::lit(params.dt);
    let mut s = params.initial.map(T::lit);
    let mut out = Array2::zeros((3, n_steps));
    let total = params.transient_steps + n_steps;
    for step in 0..total {
        if step >= params.transient_steps {
            let col = step - params.transient_steps;
            for (ch, v) in s.iter().enumerate() {
                out[[ch, col]] = *v;
            }
        }
        s = params.rk4_step(s, h);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDivergence { step: step + 1 });
        }
    }
    TimeSeries::with_names(vec!["x".into(), "y".into(), "z".into()], out, params.dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_at_reference_states() {
        let p = RosslerParams::default();
        assert_eq!(p.derivative([0.0f64, 0.0, 0.0]), [0.0, 0.0, 2.1]);
        let d = p.derivative([1.0f64, 1.0, 1.0]);
        let want = [-2.0, 1.5, -0.4];
        for (got, want) in d.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_names_step() {
        let p = RosslerParams {
            dt: 50.0,
            transient_steps: 0,
            initial: [10.0, 10.0, 10.0],
            ..Default::default()
        };
        match rossler_trajectory::<f64>(&p, 10_000) {
            Err(Error::IntegrationDivergence { step }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let p = RosslerParams::default();
        let a = rossler_trajectory::<f64>(&p, 500).unwrap();
        let b = rossler_trajectory::<f64>(&p, 500).unwrap();
        assert_eq!(a, b);
    }
}
