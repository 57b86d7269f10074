use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{prepare, train_and_evaluate, Staging};
use crate::error::{Error, Result};
use crate::ret::ablate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub n_r: usize,
    /// Mean test NMSE over targets, one entry per ablation seed.
    pub nmse: Vec<f64>,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub full_n_r: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl AblationResult {
    /// `ablation.csv` (summary per size) and `ablation_runs.csv` (every
    /// size and seed).
    pub fn write(&self, out: &Path) -> Result<()> {
        let staging = Staging::new(out)?;
        let path = staging.path("ablation.csv");
        let mut w = csv::Writer::from_writer(File::create(&path).map_err(|e| Error::io(&path, e))?);
        w.write_record(["n_r", "n_seeds", "median", "q25", "q75", "min", "max"])?;
        for r in &self.rows {
            let min = r.nmse.iter().copied().fold(f64::INFINITY, f64::min);
            let max = r.nmse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            w.write_record([
                r.n_r.to_string(),
                r.nmse.len().to_string(),
                format!("{:e}", r.median),
                format!("{:e}", r.q25),
                format!("{:e}", r.q75),
                format!("{min:e}"),
                format!("{max:e}"),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = staging.path("ablation_runs.csv");
        let mut w = csv::Writer::from_writer(File::create(&path).map_err(|e| Error::io(&path, e))?);
        w.write_record(["n_r", "seed", "nmse"])?;
        for r in &self.rows {
            for (s, v) in self.seeds.iter().zip(&r.nmse) {
                w.write_record([r.n_r.to_string(), s.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        drop(w);
        staging.commit()
    }
}

/// Builds the full feature matrix once, then trains and scores nested
/// random subsets of each size for `n_seeds` ablation seeds.
pub fn size_ablation(
    cfg: &ExperimentConfig,
    nr_list: &[usize],
    n_seeds: usize,
) -> Result<AblationResult> {
    let full = cfg.n_features();
    if nr_list.is_empty() || n_seeds == 0 {
        return Err(
            Error::Config("ablation needs sizes and n_seeds >= 1".into()).in_stage("ablation"),
        );
    }
    if let Some(bad) = nr_list.iter().find(|&&n| n == 0 || n > full) {
        return Err(
            Error::Config(format!("ablation size {bad} outside 1..={full}")).in_stage("ablation"),
        );
    }
    let prepared = prepare(cfg)?;
    let seeds: Vec<u64> = (0..n_seeds as u64)
        .map(|i| cfg.seeds.ablation.wrapping_add(i))
        .collect();
    let jobs: Vec<(usize, u64)> = nr_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, s)| {
            let features = ablate(&prepared.features, n, s).map_err(|e| e.in_stage("ablation"))?;
            Ok(train_and_evaluate(cfg, &prepared.dataset, &features)?
                .report
                .mean_nmse())
        })
        .collect::<Result<_>>()?;
    let rows = nr_list
        .iter()
        .zip(scores.chunks(n_seeds))
        .map(|(&n_r, chunk)| {
            let mut sorted = chunk.to_vec();
            sorted.sort_by(f64::total_cmp);
            AblationRow {
                n_r,
                nmse: chunk.to_vec(),
                median: quantile(&sorted, 0.5),
                q25: quantile(&sorted, 0.25),
                q75: quantile(&sorted, 0.75),
            }
        })
        .collect();
    Ok(AblationResult {
        full_n_r: full,
        seeds,
        rows,
    })
}
