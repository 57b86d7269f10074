use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Sine input at `f0` and a target obtained by applying `target` to the
/// phase `2 pi f0 t`. Sample period is `1 / (f0 * samples_per_period)`.
pub fn function_simulator_with<T: Scalar>(
    f0: f64,
    n_periods: usize,
    samples_per_period: usize,
    target: impl Fn(f64) -> f64,
) -> Result<(TimeSeries<T>, TimeSeries<T>)> {
    if samples_per_period < 8 {
        return Err(Error::invalid("samples_per_period must be >= 8"));
    }
    if !(f0 > 0.0) || n_periods == 0 {
        return Err(Error::invalid("f0 and n_periods must be positive"));
    }
    let n = n_periods * samples_per_period;
    let dt = 1.0 / (f0 * samples_per_period as f64);
    let phase = |i: usize| 2.0 * PI * i as f64 / samples_per_period as f64;
    let u = (0..n).map(|i| T::lit(phase(i).sin())).collect();
    let s = (0..n).map(|i| T::lit(target(phase(i)))).collect();
    Ok((
        TimeSeries::scalar("u", u, dt)?,
        TimeSeries::scalar("target", s, dt)?,
    ))
}

/// `u = sin(2 pi f0 t)`, target `sin^3(2 pi f0 t)`.
pub fn function_simulator_pair<T: Scalar>(
    f0: f64,
    n_periods: usize,
    samples_per_period: usize,
) -> Result<(TimeSeries<T>, TimeSeries<T>)> {
    function_simulator_with(f0, n_periods, samples_per_period, |p| p.sin().powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_phase_is_one() {
        let (u, s) = function_simulator_pair::<f64>(4e9, 3, 16).unwrap();
        assert!((u.channel(0)[4] - 1.0).abs() < 1e-15);
        assert!((s.channel(0)[4] - 1.0).abs() < 1e-15);
        assert!((u.dt() - 1.0 / 64e9).abs() < 1e-24);
    }

    #[test]
    fn triple_angle_identity() {
        let (u, s) = function_simulator_pair::<f64>(4e9, 10, 24).unwrap();
        for i in 0..u.len() {
            let th = 2.0 * PI * i as f64 / 24.0;
            let want = (3.0 * th.sin() - (3.0 * th).sin()) / 4.0;
            assert!((s.channel(0)[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn too_coarse() {
        assert!(function_simulator_pair::<f64>(4e9, 3, 4).is_err());
    }
}
