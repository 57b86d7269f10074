use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Zero-order hold: each task sample is held for `t_bin` seconds on a grid
/// of spacing `waveform_dt`. Fast sample `i` covers `[i dt, (i+1) dt)` and
/// takes the value of the bin containing its midpoint.
pub fn encode_waveform<T: Scalar>(
    series: &TimeSeries<T>,
    t_bin: f64,
    waveform_dt: f64,
) -> Result<TimeSeries<T>> {
    if !(t_bin > 0.0) {
        return Err(Error::invalid(format!("t_bin must be > 0, got {t_bin}")));
    }
    if !(waveform_dt > 0.0) || waveform_dt > t_bin / 8.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "waveform dt {waveform_dt:e} must be in (0, t_bin/8 = {:e}]",
            t_bin / 8.0
        )));
    }
    let n_bins = series.len();
    let n_out = (n_bins as f64 * t_bin / waveform_dt).round() as usize;
    let src = series.values();
    let mut out = Array2::zeros((series.n_channels(), n_out));
    for i in 0..n_out {
        let bin = (((i as f64 + 0.5) * waveform_dt / t_bin) as usize).min(n_bins - 1);
        for c in 0..series.n_channels() {
            out[[c, i]] = src[[c, bin]];
        }
    }
    TimeSeries::with_names(series.names().to_vec(), out, waveform_dt)
}
