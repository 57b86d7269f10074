use std::path::{Path, PathBuf};

use super::run::{write_predictions, Staging};
use crate::error::{Error, Result};
use crate::readout::{evaluate, fit_readout, EvalReport, ReadoutParams};
use crate::ret::FeatureMatrix;
use crate::series::TimeSeries;
use crate::Real;

/// Reads a feature matrix in the interchange CSV format, e.g. port data
/// measured on hardware.
pub fn load_external_features(path: &Path) -> Result<FeatureMatrix<Real>> {
    FeatureMatrix::load_csv(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalOptions {
    /// Leading columns dropped before the split.
    pub washout: usize,
    /// Share of the remaining columns used for training.
    pub train_fraction: f64,
    pub readout: ReadoutParams,
    /// Symbol levels for an error-rate score.
    pub levels: Option<Vec<Real>>,
    pub out_dir: PathBuf,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        Self {
            washout: 0,
            train_fraction: 0.8,
            readout: ReadoutParams::default(),
            levels: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Trains and scores a readout on a stored feature matrix and target
/// series; writes `report.csv`, `predictions.csv` and `weights.json`.
pub fn train_external(
    features: &Path,
    targets: &Path,
    opts: &ExternalOptions,
) -> Result<EvalReport> {
    let f = load_external_features(features).map_err(|e| e.in_stage("load"))?;
    let y: TimeSeries<Real> = TimeSeries::load_csv(targets).map_err(|e| e.in_stage("load"))?;
    if y.len() != f.n_cols() {
        return Err(Error::DimensionMismatch {
            left: format!("{} feature columns", f.n_cols()),
            right: format!("{} target samples", y.len()),
        }
        .in_stage("load"));
    }
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::Config("train_fraction must be in (0, 1)".into()).in_stage("config"));
    }
    let usable = f.n_cols().saturating_sub(opts.washout);
    let n_train = (usable as f64 * opts.train_fraction).round() as usize;
    if n_train == 0 || n_train >= usable {
        return Err(Error::Config(format!(
            "{} columns after washout {} leave no train/test split",
            usable, opts.washout
        ))
        .in_stage("config"));
    }
    let train = opts.washout..opts.washout + n_train;
    let test = train.end..f.n_cols();
    let weights = fit_readout(&f, &y, &opts.readout, train.clone())
        .map_err(|e| e.in_stage("readout"))?
        .with_task("external");
    let (report, pred) = evaluate(
        &weights,
        &f,
        &y,
        train,
        test.clone(),
        opts.readout.normalization,
        opts.levels.as_deref(),
    )
    .map_err(|e| e.in_stage("evaluate"))?;

    let write = || -> Result<()> {
        let staging = Staging::new(&opts.out_dir)?;
        report.save_csv(&staging.path("report.csv"))?;
        let truth = y.slice(test.start, test.end)?;
        write_predictions(
            &staging.path("predictions.csv"),
            test.start,
            &truth,
            &pred,
            opts.levels.as_deref(),
        )?;
        weights.save(&staging.path("weights.json"))?;
        staging.commit()
    };
    write().map_err(|e| e.in_stage("output"))?;
    Ok(report)
}
