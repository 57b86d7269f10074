//! Discrete Fourier helpers: magnitude spectra and dominant-period estimation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// One-sided DFT magnitudes `|X_k|`, `k = 0..=n/2`, of a real sequence.
pub fn magnitude_spectrum<T: Scalar>(samples: &[T]) -> Vec<T> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<T>> = samples
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.into_iter().map(|c| c.norm()).collect()
}

/// Power `|X_k|^2` at an exact DFT bin.
pub fn bin_power<T: Scalar>(spectrum: &[T], bin: usize) -> T {
    let m = spectrum[bin];
    m * m
}

/// Period of the lowest pronounced spectral component of channel 0.
///
/// The mean is removed and a Hann window applied before the transform. A
/// component is pronounced when its local maximum reaches half the global
/// peak; the peak location is refined by parabolic interpolation.
pub fn estimate_t_osc<T: Scalar>(series: &TimeSeries<T>) -> Result<f64> {
    let n = series.len();
    if n < 64 {
        return Err(Error::invalid(format!(
            "need at least 64 samples to estimate a period, got {n}"
        )));
    }
    let x = series.channel(0);
    let mean = x.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n as f64;
    let windowed: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
            (v.to_f64_lossy() - mean) * w
        })
        .collect();
    let mag = magnitude_spectrum(&windowed);

    let mut sorted = mag[1..].to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let (peak_bin, peak) =
        mag.iter().enumerate().skip(1).fold(
            (0, 0.0f64),
            |best, (k, &m)| if m > best.1 { (k, m) } else { best },
        );
    if peak <= 3.0 * median || peak == 0.0 {
        return Err(Error::NoDominantPeriod { peak, median });
    }

    let last = mag.len() - 1;
    let bin = (1..=peak_bin)
        .find(|&k| {
            let left = mag[k - 1];
            let right = if k < last { mag[k + 1] } else { 0.0 };
            mag[k] >= 0.5 * peak && mag[k] >= left && mag[k] >= right
        })
        .unwrap_or(peak_bin);

    let refined = if bin >= 1 && bin < last {
        let (a, b, c) = (mag[bin - 1], mag[bin], mag[bin + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            bin as f64 + 0.5 * (a - c) / denom
        } else {
            bin as f64
        }
    } else {
        bin as f64
    };
    Ok(n as f64 * series.dt() / refined)
}
