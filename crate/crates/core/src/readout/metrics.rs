use std::fs::File;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// NMSE denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `sum (pred - truth)^2 / sum truth^2`.
    #[default]
    Truth,
    /// `sum (pred - truth)^2 / sum pred^2`.
    Output,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Truth => "truth",
            Normalization::Output => "output",
        }
    }
}

fn check_shapes<T: Scalar>(a: &TimeSeries<T>, b: &TimeSeries<T>) -> Result<()> {
    if a.n_channels() != b.n_channels() || a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", a.n_channels(), a.len()),
            right: format!("{}x{}", b.n_channels(), b.len()),
        });
    }
    Ok(())
}

/// Per-channel NMSE normalised by true-signal power.
pub fn nmse<T: Scalar>(predicted: &TimeSeries<T>, truth: &TimeSeries<T>) -> Result<Vec<f64>> {
    nmse_with(predicted, truth, Normalization::Truth)
}

pub fn nmse_with<T: Scalar>(
    predicted: &TimeSeries<T>,
    truth: &TimeSeries<T>,
    norm: Normalization,
) -> Result<Vec<f64>> {
    check_shapes(predicted, truth)?;
    let (p, t) = (predicted.values(), truth.values());
    (0..truth.n_channels())
        .map(|c| {
            let mut err = 0.0;
            let mut power = 0.0;
            for (&y, &s) in p.row(c).iter().zip(t.row(c)) {
                let (y, s) = (y.to_f64_lossy(), s.to_f64_lossy());
                err += (y - s) * (y - s);
                power += match norm {
                    Normalization::Truth => s * s,
                    Normalization::Output => y * y,
                };
            }
            if power > 0.0 {
                Ok(err / power)
            } else {
                Err(Error::ZeroPower { channel: c })
            }
        })
        .collect()
}

/// Nearest level of a sorted list; exact midpoints go to the higher level.
pub fn nearest_level<T: Scalar>(x: T, levels: &[T]) -> T {
    let i = levels.partition_point(|l| *l < x);
    if i == 0 {
        return levels[0];
    }
    if i == levels.len() {
        return levels[i - 1];
    }
    let (lo, hi) = (levels[i - 1], levels[i]);
    if x - lo < hi - x {
        lo
    } else {
        hi
    }
}

pub fn quantize_levels<T: Scalar>(series: &TimeSeries<T>, levels: &[T]) -> Result<TimeSeries<T>> {
    if levels.is_empty() {
        return Err(Error::invalid("no quantization levels"));
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "quantization levels must be strictly increasing",
        ));
    }
    let v = series.values().mapv(|x| nearest_level(x, levels));
    TimeSeries::with_names(series.names().to_vec(), v, series.dt())
}

/// Fraction of positions where the two series differ.
pub fn symbol_error_rate<T: Scalar>(
    quantized: &TimeSeries<T>,
    truth: &TimeSeries<T>,
) -> Result<f64> {
    check_shapes(quantized, truth)?;
    let total = truth.values().len();
    if total == 0 {
        return Err(Error::invalid("empty series"));
    }
    let wrong = quantized
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / total as f64)
}

/// Test-set scores of one trained readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub n_features: usize,
    pub lambda: f64,
    pub normalization: Normalization,
    pub target_names: Vec<String>,
    pub nmse: Vec<f64>,
    pub ser: Option<f64>,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

impl EvalReport {
    pub fn mean_nmse(&self) -> f64 {
        self.nmse.iter().sum::<f64>() / self.nmse.len().max(1) as f64
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "task",
            "n_features",
            "lambda",
            "normalization",
            "train_start",
            "train_end",
            "test_start",
            "test_end",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.target_names.iter().map(|n| format!("nmse.{n}")));
        h.push("ser".into());
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut r = vec![
            self.task.clone(),
            self.n_features.to_string(),
            format!("{:e}", self.lambda),
            self.normalization.as_str().to_string(),
            self.train.start.to_string(),
            self.train.end.to_string(),
            self.test.start.to_string(),
            self.test.end.to_string(),
        ];
        r.extend(self.nmse.iter().map(|v| format!("{v:e}")));
        r.push(self.ser.map(|s| format!("{s:e}")).unwrap_or_default());
        r
    }

    /// Single-row CSV with header.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(self.csv_header())?;
        w.write_record(self.csv_record())?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}
