use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::series::TimeSeries;

pub const SYMBOLS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

/// Channel taps as `(lag, weight)`: `q(n) = sum weight * d(n - lag)`.
pub const CHANNEL_TAPS: [(isize, f64); 10] = [
    (-2, 0.08),
    (-1, -0.12),
    (0, 1.0),
    (1, 0.18),
    (2, -0.1),
    (3, 0.091),
    (4, -0.05),
    (5, 0.04),
    (6, 0.03),
    (7, 0.01),
];

/// Applies the multipath channel; symbols outside `d` count as zero.
pub fn nce_channel<T: Scalar>(d: &[T]) -> Vec<T> {
    let n = d.len() as isize;
    (0..n)
        .map(|i| {
            CHANNEL_TAPS.iter().fold(T::zero(), |acc, &(lag, w)| {
                let j = i - lag;
                if (0..n).contains(&j) {
                    acc + T::lit(w) * d[j as usize]
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// Random 4-level symbols `d` and the received sequence `q`, optionally with
/// white Gaussian noise at `noise_snr_db` relative to the noiseless power of `q`.
pub fn nce_sequences<T: Scalar>(
    n_steps: usize,
    seed: u64,
    noise_snr_db: Option<f64>,
) -> Result<(TimeSeries<T>, TimeSeries<T>)> {
    if n_steps < 10 {
        return Err(Error::invalid(format!(
            "NCE needs >= 10 steps, got {n_steps}"
        )));
    }
    let mut rng = seeded(seed, 0x004e_4345);
    let d: Vec<T> = (0..n_steps)
        .map(|_| T::lit(SYMBOLS[rng.gen_range(0..SYMBOLS.len())]))
        .collect();
    let mut q = nce_channel(&d);
    if let Some(snr) = noise_snr_db {
        let power = q.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / n_steps as f64;
        let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
        let mut noise_rng = seeded(seed, 0x4e4f_4953);
        for v in &mut q {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *v += T::lit(sigma * z);
        }
    }
    Ok((
        TimeSeries::scalar("d", d, 1.0)?,
        TimeSeries::scalar("q", q, 1.0)?,
    ))
}
