use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Waveform index holding the state at time `t`: sample `n` is the state
/// at `(n + 1) dt`.
#[inline]
pub(crate) fn index_at(t: f64, dt: f64, len: usize) -> usize {
    ((t / dt).round() as usize).clamp(1, len) - 1
}

/// Downsamples port traces to task steps: `taps_per_bin` equally spaced
/// samples inside each bin, the last at the bin end. Rows are port-major
/// (`port * taps_per_bin + tap`), columns are task steps.
pub fn sample_ports<T: Scalar>(
    port_voltages: &TimeSeries<T>,
    t_bin: f64,
    taps_per_bin: usize,
) -> Result<Array2<T>> {
    let dt = port_voltages.dt();
    if taps_per_bin == 0 {
        return Err(Error::invalid("taps_per_bin must be >= 1"));
    }
    if !(t_bin >= dt * (1.0 - 1e-9)) {
        return Err(Error::invalid(format!(
            "bin {t_bin:e} s shorter than waveform dt {dt:e} s"
        )));
    }
    if t_bin / dt < taps_per_bin as f64 * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "{taps_per_bin} taps do not fit in a bin of {:.3} samples",
            t_bin / dt
        )));
    }
    let len = port_voltages.len();
    let n_bins = (port_voltages.duration() / t_bin + 1e-9).floor() as usize;
    let n_ports = port_voltages.n_channels();
    let v = port_voltages.values();
    let mut out = Array2::zeros((n_ports * taps_per_bin, n_bins));
    for j in 0..n_bins {
        for tap in 0..taps_per_bin {
            let t = t_bin * (j as f64 + (tap + 1) as f64 / taps_per_bin as f64);
            let n = index_at(t, dt, len);
            for p in 0..n_ports {
                out[[p * taps_per_bin + tap, j]] = v[[p, n]];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_voltage() {
        let ts =
            TimeSeries::from_channels(&["a", "b"], vec![vec![2.0f64; 96], vec![2.0; 96]], 5e-12)
                .unwrap();
        let m = sample_ports(&ts, 60e-12, 1).unwrap();
        assert_eq!(m.dim(), (2, 8));
        assert!(m.iter().all(|v| *v == 2.0));
    }

    #[test]
    fn matches_index_arithmetic() {
        let n = 120;
        let ch0: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ch1: Vec<f64> = (0..n).map(|i| 1000.0 + i as f64).collect();
        let ts = TimeSeries::from_channels(&["a", "b"], vec![ch0, ch1], 1.0).unwrap();
        let m = sample_ports(&ts, 12.0, 3).unwrap();
        assert_eq!(m.dim(), (6, 10));
        for j in 0..10 {
            for tap in 0..3 {
                // bin j covers samples 12j..12j+11; taps at offsets 3, 7, 11
                let idx = 12 * j + 4 * (tap + 1) - 1;
                assert_eq!(m[[tap, j]], idx as f64);
                assert_eq!(m[[3 + tap, j]], 1000.0 + idx as f64);
            }
        }
    }

    #[test]
    fn rejects_short_bins() {
        let ts = TimeSeries::scalar("a", vec![0.0f64; 10], 1.0).unwrap();
        assert!(sample_ports(&ts, 0.5, 1).is_err());
        assert!(sample_ports(&ts, 2.0, 3).is_err());
    }
}
