//! Linear readout `s = W r`: ridge training, prediction and scoring.

mod metrics;
mod solve;

use std::fs;
use std::ops::Range;
use std::path::Path;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

pub use metrics::{
    nearest_level, nmse, nmse_with, quantize_levels, symbol_error_rate, EvalReport, Normalization,
};

use crate::error::{Error, Result};
use crate::ret::FeatureMatrix;
use crate::scalar::Scalar;
use crate::series::TimeSeries;

const FORMAT: &str = "reverb-rc/readout-weights";
const FORMAT_VERSION: u32 = 1;

/// Trained output map, `targets x (N_r + 1)`; the last column multiplies
/// the bias row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights<T> {
    w: Array2<T>,
    lambda: f64,
    row_labels: Vec<String>,
    target_names: Vec<String>,
    task: String,
    dt: f64,
}

impl<T: Scalar> ReadoutWeights<T> {
    pub fn new(
        w: Array2<T>,
        lambda: f64,
        row_labels: Vec<String>,
        target_names: Vec<String>,
        dt: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        if w.ncols() != row_labels.len() || w.nrows() != target_names.len() {
            return Err(Error::DimensionMismatch {
                left: format!("W {}x{}", w.nrows(), w.ncols()),
                right: format!("{} targets x {} rows", target_names.len(), row_labels.len()),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite readout weight"));
        }
        Ok(Self {
            w,
            lambda,
            row_labels,
            target_names,
            task: String::new(),
            dt,
        })
    }

    pub fn with_task(mut self, task: impl Into<String>) -> Self {
        self.task = task.into();
        self
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.w
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = WeightsFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            task: self.task.clone(),
            lambda: self.lambda,
            dt: self.dt,
            target_names: self.target_names.clone(),
            row_labels: self.row_labels.clone(),
            weights: self.w.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: WeightsFile<T> = serde_json::from_str(&text)?;
        if file.format != FORMAT || file.version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported weights file {} v{}",
                file.format, file.version
            )));
        }
        let cols = file.row_labels.len();
        let rows = file.weights.len();
        let flat: Vec<T> = file.weights.into_iter().flatten().collect();
        let w = Array2::from_shape_vec((rows, cols), flat)
            .map_err(|e| Error::invalid(format!("weights: {e}")))?;
        Ok(
            Self::new(w, file.lambda, file.row_labels, file.target_names, file.dt)?
                .with_task(file.task),
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct WeightsFile<T> {
    format: String,
    version: u32,
    task: String,
    lambda: f64,
    dt: f64,
    target_names: Vec<String>,
    row_labels: Vec<String>,
    weights: Vec<Vec<T>>,
}

fn label_strings<T: Scalar>(features: &FeatureMatrix<T>) -> Vec<String> {
    features
        .labels()
        .iter()
        .map(ToString::to_string)
        .chain(std::iter::once(crate::ret::BIAS_LABEL.to_string()))
        .collect()
}

fn check_range(cols: &Range<usize>, len: usize) -> Result<()> {
    if cols.start >= cols.end || cols.end > len {
        return Err(Error::invalid(format!(
            "column range {}..{} not inside 0..{len}",
            cols.start, cols.end
        )));
    }
    Ok(())
}

/// `R R^T` and `R S^T` over a column range, accumulated in f64.
struct NormalEquations {
    gram: Array2<f64>,
    rhs: Array2<f64>,
}

impl NormalEquations {
    fn new<T: Scalar>(
        features: &FeatureMatrix<T>,
        targets: &TimeSeries<T>,
        cols: &Range<usize>,
    ) -> Result<Self> {
        if targets.len() != features.n_cols() {
            return Err(Error::DimensionMismatch {
                left: format!("features {}x{}", features.n_rows(), features.n_cols()),
                right: format!("targets {}x{}", targets.n_channels(), targets.len()),
            });
        }
        check_range(cols, features.n_cols())?;
        let r = features
            .data()
            .slice(s![.., cols.clone()])
            .mapv(|v| v.to_f64_lossy());
        let y = targets
            .values()
            .slice(s![.., cols.clone()])
            .mapv(|v| v.to_f64_lossy());
        Ok(Self {
            gram: r.dot(&r.t()),
            rhs: r.dot(&y.t()),
        })
    }

    fn mean_diag(&self) -> f64 {
        self.gram.diag().mean().unwrap_or(0.0)
    }

    fn solve<T: Scalar>(&self, lambda: f64) -> Result<Array2<T>> {
        let x = solve::solve_spd(self.gram.view(), lambda, self.rhs.view())?;
        Ok(x.t().mapv(T::lit))
    }
}

/// Ridge regression `W = S R^T (R R^T + lambda I)^-1` over `train_cols`.
/// The bias row is part of `R`, so there is no separate intercept.
pub fn train_ridge<T: Scalar>(
    features: &FeatureMatrix<T>,
    targets: &TimeSeries<T>,
    lambda: f64,
    train_cols: Range<usize>,
) -> Result<ReadoutWeights<T>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let ne = NormalEquations::new(features, targets, &train_cols)?;
    ReadoutWeights::new(
        ne.solve(lambda)?,
        lambda,
        label_strings(features),
        targets.names().to_vec(),
        targets.dt(),
    )
}

/// `W r` over `cols`, one channel per target.
pub fn predict<T: Scalar>(
    weights: &ReadoutWeights<T>,
    features: &FeatureMatrix<T>,
    cols: Range<usize>,
) -> Result<TimeSeries<T>> {
    if weights.w.ncols() != features.n_rows() {
        return Err(Error::DimensionMismatch {
            left: format!("W {}x{}", weights.w.nrows(), weights.w.ncols()),
            right: format!("features {}x{}", features.n_rows(), features.n_cols()),
        });
    }
    check_range(&cols, features.n_cols())?;
    let out = weights.w.dot(&features.data().slice(s![.., cols]));
    TimeSeries::with_names(weights.target_names.clone(), out, weights.dt)
}

/// How the ridge parameter is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutParams {
    /// Fixed absolute ridge parameter; overrides the grid.
    pub lambda: Option<f64>,
    /// Candidates relative to the mean diagonal of `R R^T`.
    pub lambda_grid: Vec<f64>,
    /// Trailing share of the training columns held out to pick lambda.
    pub validation_fraction: f64,
    pub normalization: Normalization,
    /// Task steps discarded before training; default from the decay time.
    pub washout: Option<usize>,
}

impl Default for ReadoutParams {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda_grid: (-8..=-1).map(|e| 10f64.powi(e)).collect(),
            validation_fraction: 0.1,
            normalization: Normalization::Truth,
            washout: None,
        }
    }
}

impl ReadoutParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be >= 0, got {l}")));
            }
        } else if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Config(
                "lambda_grid must be nonempty and positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(
                "validation_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Trains with a fixed lambda, or picks the grid point with the lowest
/// mean validation NMSE on the tail of `train_cols` and refits on all of
/// them.
pub fn fit_readout<T: Scalar>(
    features: &FeatureMatrix<T>,
    targets: &TimeSeries<T>,
    params: &ReadoutParams,
    train_cols: Range<usize>,
) -> Result<ReadoutWeights<T>> {
    params.validate()?;
    if let Some(l) = params.lambda {
        return train_ridge(features, targets, l, train_cols);
    }
    check_range(&train_cols, features.n_cols())?;
    let n_val = ((train_cols.len() as f64 * params.validation_fraction).round() as usize).max(1);
    if n_val >= train_cols.len() {
        return Err(Error::invalid(
            "training range too short for validation split",
        ));
    }
    let split = train_cols.end - n_val;
    let fit = NormalEquations::new(features, targets, &(train_cols.start..split))?;
    let scale = fit.mean_diag();
    let truth = targets.slice(split, train_cols.end)?;
    let labels = label_strings(features);

    let mut best: Option<(f64, f64)> = None;
    for rel in &params.lambda_grid {
        let lambda = rel * scale;
        let w = match fit.solve::<T>(lambda) {
            Ok(w) => w,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        let weights = ReadoutWeights::new(
            w,
            lambda,
            labels.clone(),
            targets.names().to_vec(),
            targets.dt(),
        )?;
        let pred = predict(&weights, features, split..train_cols.end)?;
        let score = match nmse_with(&pred, &truth, params.normalization) {
            Ok(v) => v.iter().sum::<f64>() / v.len() as f64,
            Err(Error::ZeroPower { .. }) => continue,
            Err(e) => return Err(e),
        };
        if score.is_finite() && best.is_none_or(|(s, _)| score < s) {
            best = Some((score, *rel));
        }
    }
    let (_, rel) = best.ok_or(Error::RankDeficient { pivot: 0 })?;
    let full = NormalEquations::new(features, targets, &train_cols)?;
    let lambda = rel * full.mean_diag();
    ReadoutWeights::new(
        full.solve(lambda)?,
        lambda,
        labels,
        targets.names().to_vec(),
        targets.dt(),
    )
}

/// Test-range scores; `levels` adds a symbol error rate after nearest-level
/// quantisation.
pub fn evaluate<T: Scalar>(
    weights: &ReadoutWeights<T>,
    features: &FeatureMatrix<T>,
    targets: &TimeSeries<T>,
    train_cols: Range<usize>,
    test_cols: Range<usize>,
    normalization: Normalization,
    levels: Option<&[T]>,
) -> Result<(EvalReport, TimeSeries<T>)> {
    let pred = predict(weights, features, test_cols.clone())?;
    let truth = targets.slice(test_cols.start, test_cols.end)?;
    let nmse = nmse_with(&pred, &truth, normalization)?;
    let ser = match levels {
        Some(l) => Some(symbol_error_rate(&quantize_levels(&pred, l)?, &truth)?),
        None => None,
    };
    let report = EvalReport {
        task: weights.task.clone(),
        n_features: features.n_features(),
        lambda: weights.lambda,
        normalization,
        target_names: weights.target_names.clone(),
        nmse,
        ser,
        train: train_cols,
        test: test_cols,
    };
    Ok((report, pred))
}
