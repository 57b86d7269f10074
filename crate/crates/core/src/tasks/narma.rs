use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::series::TimeSeries;

const ORDER: usize = 10;
const MAX_ATTEMPTS: u64 = 10;

/// NARMA-10 response to `u`. Element `n` of the result is `y(n+1)`, so the
/// target at step `n` depends on inputs up to and including `u(n)`.
/// Histories before index 0 are zero.
pub fn narma10_target<T: Scalar>(u: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let input = u.channel(0);
    let n = input.len();
    if n < ORDER {
        return Err(Error::invalid(format!(
            "NARMA-10 needs >= {ORDER} samples, got {n}"
        )));
    }
    let (lo, hi) = (T::zero(), T::lit(0.5));
    if let Some(i) = input.iter().position(|&v| v < lo || v > hi) {
        return Err(Error::invalid(format!("u[{i}] outside [0, 0.5]")));
    }
    let (c03, c005, c15, c01) = (T::lit(0.3), T::lit(0.05), T::lit(1.5), T::lit(0.1));
    // y[k] holds y(k); y(0) = 0.
    let mut y = vec![T::zero(); n + 1];
    for t in 0..n {
        let mut sum = T::zero();
        for i in 0..ORDER {
            if t >= i {
                sum += y[t - i];
            }
        }
        let lagged = if t >= 9 { input[t - 9] } else { T::zero() };
        let next = c03 * y[t] + c005 * y[t] * sum + c15 * lagged * input[t] + c01;
        if !(next.abs() <= T::lit(10.0)) {
            return Err(Error::NarmaDivergence {
                step: t + 1,
                value: next.to_f64_lossy(),
            });
        }
        y[t + 1] = next;
    }
    TimeSeries::scalar("y", y[1..].to_vec(), u.dt())
}

/// Draws `u ~ U[0, 0.5]` and its NARMA-10 target, redrawing with a fresh
/// stream on divergence up to ten times.
pub fn narma10_pair<T: Scalar>(n: usize, seed: u64) -> Result<(TimeSeries<T>, TimeSeries<T>)> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seeded(seed, 0x4e41_524d + attempt);
        let u: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(0.0..=0.5))).collect();
        let u = TimeSeries::scalar("u", u, 1.0)?;
        match narma10_target(&u) {
            Ok(y) => return Ok((u, y)),
            Err(e @ Error::NarmaDivergence { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_first_value() {
        let u = TimeSeries::scalar("u", vec![0.0f64; 20], 1.0).unwrap();
        let y = narma10_target(&u).unwrap();
        assert!((y.channel(0)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_input_fixed_point() {
        // smaller root of 0.5 y^2 - 0.7 y + 0.1 = 0
        let fixed = (0.7 - (0.49f64 - 0.2).sqrt()) / 1.0;
        assert!((fixed - 0.16148).abs() < 1e-5);
        let u = TimeSeries::scalar("u", vec![0.0f64; 200], 1.0).unwrap();
        let y = narma10_target(&u).unwrap();
        assert!((y.channel(0)[199] - fixed).abs() < 1e-4);
    }

    #[test]
    fn rejects_out_of_range_input() {
        let u = TimeSeries::scalar("u", vec![0.6f64; 20], 1.0).unwrap();
        assert!(narma10_target(&u).is_err());
    }

    #[test]
    fn pairs_are_deterministic() {
        let (u1, y1) = narma10_pair::<f64>(300, 9).unwrap();
        let (u2, y2) = narma10_pair::<f64>(300, 9).unwrap();
        assert_eq!(u1, u2);
        assert_eq!(y1, y2);
        assert!(u1.channel(0).iter().all(|&v| (0.0..=0.5).contains(&v)));
    }
}
