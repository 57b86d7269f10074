//! Experiment orchestration: config files, end-to-end runs, parameter
//! sweeps, size ablations and training on externally measured features.

mod ablation;
mod config;
mod external;
mod run;
mod sweep;

pub use ablation::{quantile, size_ablation, AblationResult, AblationRow};
pub use config::{
    AblationPlan, ExperimentConfig, OutputConfig, Seeds, SweepGrid, Timing, DEFAULT_T_BIN,
    DEFAULT_T_OSC, MIN_WASHOUT,
};
pub use external::{load_external_features, train_external, ExternalOptions};
pub use run::{
    build_reservoir, evaluate_config, prepare, run_experiment, train_and_evaluate,
    write_predictions, Artifacts, Outcome, Prepared, RunRecord, DIODE_KNEE_FRACTION,
};
pub use sweep::{sweep_heatmap, SweepCell, SweepResult};

use crate::error::{Error, Result};

/// Runs `f` on a rayon pool with `jobs` workers (`None`: all cores).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
