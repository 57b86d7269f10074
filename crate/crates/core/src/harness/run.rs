use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::cavity::{build_cavity, simulate_linear, DiodeParams, ModalReservoir};
use crate::error::{Error, Result};
use crate::readout::{evaluate, fit_readout, EvalReport, ReadoutWeights};
use crate::ret::{run_ensemble, FeatureMatrix};
use crate::series::TimeSeries;
use crate::tasks::{encode_waveform, TaskDataset};
use crate::Real;

/// Default diode knee relative to the RMS linear port voltage.
pub const DIODE_KNEE_FRACTION: f64 = 0.01;

/// Everything up to and including the feature matrix.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: TaskDataset<Real>,
    /// Amplitude-normalised waveform fed to every member.
    pub drive: TimeSeries<Real>,
    pub reservoir: ModalReservoir<Real>,
    pub features: FeatureMatrix<Real>,
    pub t_bin: f64,
}

/// Trained readout and its test-set scores.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub weights: ReadoutWeights<Real>,
    pub report: EvalReport,
    /// Readout output over the test range.
    pub predictions: TimeSeries<Real>,
    /// Truth over the test range.
    pub truth: TimeSeries<Real>,
}

/// Zero-mean, unit-variance copy of a one-channel input.
fn standardize(input: &TimeSeries<Real>) -> Result<TimeSeries<Real>> {
    let v = input.values();
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt().recip() } else { 1.0 };
    TimeSeries::with_names(
        input.names().to_vec(),
        v.mapv(|x| (x - mean) * scale),
        input.dt(),
    )
}

/// Task data, waveform, cavity and ensemble features for a config.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let t_bin = cfg.t_bin();
    let dataset: TaskDataset<Real> = cfg
        .task
        .generate(cfg.washout(), cfg.seeds.task)
        .map_err(|e| e.in_stage("task"))?;
    let drive = standardize(&dataset.input)
        .and_then(|u| encode_waveform(&u, t_bin, cfg.waveform_dt()))
        .map_err(|e| e.in_stage("encode"))?;

    let (reservoir, drive) = build_reservoir(cfg, &drive).map_err(|e| e.in_stage("cavity"))?;
    let mut spec = cfg.ensemble.clone();
    spec.seed = cfg.seeds.ensemble;
    let features = run_ensemble(&reservoir, &spec, &drive, t_bin, cfg.timing.taps_per_bin)
        .map_err(|e| e.in_stage("ensemble"))?;
    if features.n_cols() != dataset.input.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} feature columns", features.n_cols()),
            right: format!("{} task steps", dataset.input.len()),
        }
        .in_stage("ensemble"));
    }
    Ok(Prepared {
        dataset,
        drive,
        reservoir,
        features,
        t_bin,
    })
}

/// Base cavity and the drive rescaled so the cavity's linear port RMS is
/// one; the diode knee is then `cavity.diode_epsilon` in those units, or
/// [`DIODE_KNEE_FRACTION`] when unset.
pub fn build_reservoir(
    cfg: &ExperimentConfig,
    drive: &TimeSeries<Real>,
) -> Result<(ModalReservoir<Real>, TimeSeries<Real>)> {
    let base: ModalReservoir<Real> = build_cavity(&cfg.cavity, cfg.seeds.cavity)?;
    let lin = simulate_linear(&base, drive)?;
    let v = lin.values();
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt();
    if !(rms > 0.0 && rms.is_finite()) {
        return Err(Error::invalid("drive produces no port signal"));
    }
    let scaled = TimeSeries::with_names(drive.names().to_vec(), drive.values() / rms, drive.dt())?;
    let eps = cfg.cavity.diode_epsilon.unwrap_or(DIODE_KNEE_FRACTION);
    let diode = DiodeParams::new(cfg.cavity.diode_alpha, eps)?;
    Ok((base.with_diode(diode), scaled))
}

/// Fits the readout on the training window and scores the test window.
pub fn train_and_evaluate(
    cfg: &ExperimentConfig,
    dataset: &TaskDataset<Real>,
    features: &FeatureMatrix<Real>,
) -> Result<Outcome> {
    let (train, test) = (dataset.train_range(), dataset.test_range());
    let weights = fit_readout(features, &dataset.target, &cfg.readout, train.clone())
        .map_err(|e| e.in_stage("readout"))?
        .with_task(cfg.task.name());
    let levels = cfg.task.symbol_levels();
    let (report, predictions) = evaluate(
        &weights,
        features,
        &dataset.target,
        train,
        test.clone(),
        cfg.readout.normalization,
        levels.as_deref(),
    )
    .map_err(|e| e.in_stage("evaluate"))?;
    let truth = dataset
        .target
        .slice(test.start, test.end)
        .map_err(|e| e.in_stage("evaluate"))?;
    Ok(Outcome {
        weights,
        report,
        predictions,
        truth,
    })
}

/// Prepare, train and evaluate without writing anything.
pub fn evaluate_config(cfg: &ExperimentConfig) -> Result<(Prepared, Outcome)> {
    let prepared = prepare(cfg)?;
    let outcome = train_and_evaluate(cfg, &prepared.dataset, &prepared.features)?;
    Ok((prepared, outcome))
}

/// Files written by one run, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub report: PathBuf,
    pub predictions: PathBuf,
    pub weights: PathBuf,
    pub reservoir: PathBuf,
    pub config: PathBuf,
    pub features: Option<PathBuf>,
}

/// Summary of one run. The only file carrying timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub report: EvalReport,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub output_dir: PathBuf,
    pub artifacts: Artifacts,
}

/// Writes per-step truth and prediction for every target; symbol tasks
/// also get the quantised decision.
pub fn write_predictions(
    path: &Path,
    first_step: usize,
    truth: &TimeSeries<Real>,
    pred: &TimeSeries<Real>,
    levels: Option<&[Real]>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["step".to_string()];
    for name in truth.names() {
        header.push(format!("truth.{name}"));
        header.push(format!("pred.{name}"));
        if levels.is_some() {
            header.push(format!("symbol.{name}"));
        }
    }
    w.write_record(&header)?;
    for n in 0..truth.len() {
        let mut row = vec![(first_step + n).to_string()];
        for c in 0..truth.n_channels() {
            let p = pred.values()[[c, n]];
            row.push(format!("{:e}", truth.values()[[c, n]]));
            row.push(format!("{p:e}"));
            if let Some(l) = levels {
                row.push(format!("{:e}", crate::readout::nearest_level(p, l)));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Scratch directory whose contents are moved into place on success and
/// removed otherwise.
pub(crate) struct Staging {
    dir: PathBuf,
    out: PathBuf,
    done: bool,
}

impl Staging {
    pub(crate) fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let dir = out.join(format!(".partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            out: out.to_path_buf(),
            done: false,
        })
    }

    pub(crate) fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub(crate) fn commit(mut self) -> Result<()> {
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let target = self.out.join(entry.file_name());
            fs::rename(entry.path(), &target).map_err(|e| Error::io(&target, e))?;
        }
        fs::remove_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        self.done = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Full pipeline plus artifacts in `cfg.output.dir`:
/// `report.csv`, `predictions.csv`, `weights.json`, `reservoir.json`,
/// `config.toml`, optionally `features.csv`, and `run_record.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let hash = cfg.hash().map_err(|e| e.in_stage("config"))?;
    let (prepared, outcome) = evaluate_config(cfg)?;

    let out = &cfg.output.dir;
    let write = || -> Result<RunRecord> {
        let staging = Staging::new(out)?;
        let artifacts = Artifacts {
            report: "report.csv".into(),
            predictions: "predictions.csv".into(),
            weights: "weights.json".into(),
            reservoir: "reservoir.json".into(),
            config: "config.toml".into(),
            features: cfg.output.write_features.then(|| "features.csv".into()),
        };
        outcome.report.save_csv(&staging.path("report.csv"))?;
        let levels = cfg.task.symbol_levels();
        write_predictions(
            &staging.path("predictions.csv"),
            outcome.report.test.start,
            &outcome.truth,
            &outcome.predictions,
            levels.as_deref(),
        )?;
        outcome.weights.save(&staging.path("weights.json"))?;
        prepared.reservoir.save(&staging.path("reservoir.json"))?;
        let cfg_path = staging.path("config.toml");
        fs::write(&cfg_path, cfg.to_toml_string()?).map_err(|e| Error::io(&cfg_path, e))?;
        if cfg.output.write_features {
            prepared.features.save_csv(&staging.path("features.csv"))?;
        }
        let record = RunRecord {
            config_hash: hash.clone(),
            report: outcome.report.clone(),
            started_unix_s: started,
            wall_clock_s: clock.elapsed().as_secs_f64(),
            output_dir: out.clone(),
            artifacts,
        };
        let rec_path = staging.path("run_record.json");
        let mut f = File::create(&rec_path).map_err(|e| Error::io(&rec_path, e))?;
        f.write_all(serde_json::to_string_pretty(&record)?.as_bytes())
            .map_err(|e| Error::io(&rec_path, e))?;
        staging.commit()?;
        Ok(record)
    };
    write().map_err(|e| e.in_stage("output"))
}
