use ndarray::Array2;
use rustdct::DctPlanner;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Output length for a stretch by `beta`; the realised factor is
/// `stirred_len(n, beta) / n`.
pub fn stirred_len(n: usize, beta: f64) -> usize {
    ((beta * n as f64).round() as usize).max(1)
}

/// Time-scales a drive, `u(t) -> u(t / beta)`, at the same sample period.
///
/// Resampling is band-limited: the even (half-sample symmetric) extension
/// of each channel is expanded in a cosine series by DCT-II and re-evaluated
/// on the stretched grid by DCT-III. Sample centres map as
/// `(n + 1/2) -> beta (n + 1/2)`. When shrinking (`beta < 1`) components
/// above the new Nyquist limit are dropped. `beta = 1` returns the input
/// unchanged.
pub fn frequency_stir<T: Scalar>(drive: &TimeSeries<T>, beta: f64) -> Result<TimeSeries<T>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
    }
    if beta == 1.0 {
        return Ok(drive.clone());
    }
    let n = drive.len();
    if n == 0 {
        return Ok(drive.clone());
    }
    let m = stirred_len(n, beta);
    let mut planner = DctPlanner::new();
    let forward = planner.plan_dct2(n);
    let inverse = planner.plan_dct3(m);
    let keep = n.min(m);
    let scale = T::lit(2.0 / n as f64);

    let mut out = Array2::zeros((drive.n_channels(), m));
    for (c, row) in drive.values().rows().into_iter().enumerate() {
        let mut coeffs = row.to_vec();
        forward.process_dct2(&mut coeffs);
        let mut buf = vec![T::zero(); m];
        buf[..keep].copy_from_slice(&coeffs[..keep]);
        inverse.process_dct3(&mut buf);
        for (dst, v) in out.row_mut(c).iter_mut().zip(buf) {
            *dst = v * scale;
        }
    }
    TimeSeries::with_names(drive.names().to_vec(), out, drive.dt())
}

/// `f0 / (f0 + k df)` for `k = 0..n`: the stretch that moves a waveform
/// centred at `f0` down in time-scale as its centre steps up by `df`.
pub fn default_betas(n: usize, f0: f64, df: f64) -> Vec<f64> {
    (0..n).map(|k| f0 / (f0 + k as f64 * df)).collect()
}
