use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reverb_rc::harness::{
    run_experiment, size_ablation, sweep_heatmap, train_external, with_jobs, ExperimentConfig,
    ExternalOptions,
};
use reverb_rc::tasks::TaskSpec;
use reverb_rc::{Dataset, Error, Result};

#[derive(Parser)]
#[command(
    name = "reverb-rc",
    version,
    about = "Reverberant-cavity reservoir computing simulator"
)]
struct Cli {
    /// Replace every seed in the config with this value.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run { config: PathBuf },
    /// T_bin (or T_osc) x T_decay heat map from the config's [sweep] table.
    Sweep { config: PathBuf },
    /// Size ablation from the config's [ablation] table.
    Ablate { config: PathBuf },
    /// Write a task's default dataset as CSV.
    GenTask {
        task: String,
        out: PathBuf,
        /// Washout samples prepended to the train/test windows.
        #[arg(long, default_value_t = 0)]
        washout: usize,
    },
    /// Train a readout on stored features and targets.
    TrainExternal {
        features: PathBuf,
        targets: PathBuf,
        #[arg(long, default_value_t = 0)]
        washout: usize,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        /// Fixed ridge parameter instead of the validation grid.
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated symbol levels for an error-rate score.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Option<Vec<f64>>,
    },
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| e.in_stage("config"))?;
    if let Some(seed) = cli.seed_override {
        cfg = cfg.with_seed_override(seed);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

/// Runs `f` on the worker pool requested by `--jobs`.
fn pooled<R: Send>(cli: &Cli, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    with_jobs(cli.jobs, f).map_err(|e| e.in_stage("config"))?
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let rec = pooled(cli, || run_experiment(&cfg))?;
            for (name, v) in rec.report.target_names.iter().zip(&rec.report.nmse) {
                println!("nmse.{name} = {v:.6e}");
            }
            if let Some(ser) = rec.report.ser {
                println!("ser = {ser:.6e}");
            }
            println!("n_features = {}", rec.report.n_features);
            println!("lambda = {:.3e}", rec.report.lambda);
            println!("output = {}", rec.output_dir.display());
        }
        Command::Sweep { config } => {
            let cfg = load(cli, config)?;
            let grid = cfg.sweep.clone().ok_or_else(|| {
                Error::Config("config has no [sweep] table".into()).in_stage("config")
            })?;
            let res = pooled(cli, || sweep_heatmap(&cfg, &grid.t_axis, &grid.decay_axis))?;
            res.write(&cfg.output.dir)
                .map_err(|e| e.in_stage("output"))?;
            let failed = res.cells.iter().filter(|c| c.nmse.is_none()).count();
            match res.argmin() {
                Some((t, d)) => println!(
                    "argmin t = {:e} s, t_decay = {:e} s, nmse = {:.6e} ({} of {} cells failed)",
                    res.t_axis[t],
                    res.decay_axis[d],
                    res.cell(t, d).nmse.unwrap_or(f64::NAN),
                    failed,
                    res.cells.len()
                ),
                None => {
                    return Err(Error::Config("every sweep cell failed".into()).in_stage("sweep"))
                }
            }
        }
        Command::Ablate { config } => {
            let cfg = load(cli, config)?;
            let plan = cfg.ablation.clone().ok_or_else(|| {
                Error::Config("config has no [ablation] table".into()).in_stage("config")
            })?;
            let res = pooled(cli, || size_ablation(&cfg, &plan.sizes, plan.n_seeds))?;
            res.write(&cfg.output.dir)
                .map_err(|e| e.in_stage("output"))?;
            for r in &res.rows {
                println!(
                    "n_r = {:>5}  median nmse = {:.6e}  [{:.3e}, {:.3e}]",
                    r.n_r, r.median, r.q25, r.q75
                );
            }
        }
        Command::GenTask { task, out, washout } => {
            let spec = TaskSpec::by_name(task).map_err(|e| e.in_stage("config"))?;
            let data: Dataset = spec
                .generate(*washout, cli.seed_override.unwrap_or(0))
                .map_err(|e| e.in_stage("task"))?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| {
                    Error::Io {
                        path: parent.to_path_buf(),
                        source: e,
                    }
                    .in_stage("output")
                })?;
            }
            data.save_csv(out).map_err(|e| e.in_stage("output"))?;
            println!("{} samples written to {}", data.input.len(), out.display());
        }
        Command::TrainExternal {
            features,
            targets,
            washout,
            train_fraction,
            lambda,
            levels,
        } => {
            let mut opts = ExternalOptions {
                washout: *washout,
                train_fraction: *train_fraction,
                levels: levels.clone(),
                ..Default::default()
            };
            opts.readout.lambda = *lambda;
            if let Some(dir) = &cli.out_dir {
                opts.out_dir = dir.clone();
            }
            let report = pooled(cli, || train_external(features, targets, &opts))?;
            for (name, v) in report.target_names.iter().zip(&report.nmse) {
                println!("nmse.{name} = {v:.6e}");
            }
            if let Some(ser) = report.ser {
                println!("ser = {ser:.6e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
