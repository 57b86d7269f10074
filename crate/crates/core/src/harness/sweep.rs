use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{evaluate_config, Staging};
use crate::error::{Error, Result};

/// One grid point: mean test NMSE over target channels, or the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub t: f64,
    pub t_decay: f64,
    pub nmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t_axis: Vec<f64>,
    pub decay_axis: Vec<f64>,
    /// Decay-major: `cells[d * t_axis.len() + t]`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, t_index: usize, decay_index: usize) -> &SweepCell {
        &self.cells[decay_index * self.t_axis.len() + t_index]
    }

    /// `(t_index, decay_index)` of the lowest finished cell.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let nt = self.t_axis.len();
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.nmse.map(|v| (i, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| (i % nt, i / nt))
    }

    pub fn best(&self) -> Option<f64> {
        self.argmin().map(|(t, d)| self.cell(t, d).nmse.unwrap())
    }

    /// `100 (nmse - best) / best` per cell.
    pub fn deviation_percent(&self) -> Vec<Option<f64>> {
        let best = self.best();
        self.cells
            .iter()
            .map(|c| match (c.nmse, best) {
                (Some(v), Some(b)) if b > 0.0 => Some(100.0 * (v - b) / b),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            })
            .collect()
    }

    fn write_grid(&self, path: &Path, values: &[Option<f64>]) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["t_decay\\t".to_string()];
        header.extend(self.t_axis.iter().map(|t| format!("{t:e}")));
        w.write_record(&header)?;
        for (d, decay) in self.decay_axis.iter().enumerate() {
            let mut row = vec![format!("{decay:e}")];
            let nt = self.t_axis.len();
            row.extend(
                values[d * nt..(d + 1) * nt]
                    .iter()
                    .map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// `sweep.csv` (one line per cell), `sweep_nmse.csv` and
    /// `sweep_deviation.csv` (decay rows by t columns; empty = failed).
    pub fn write(&self, out: &Path) -> Result<()> {
        let staging = Staging::new(out)?;
        let nmse: Vec<Option<f64>> = self.cells.iter().map(|c| c.nmse).collect();
        let dev = self.deviation_percent();
        self.write_grid(&staging.path("sweep_nmse.csv"), &nmse)?;
        self.write_grid(&staging.path("sweep_deviation.csv"), &dev)?;

        let path = staging.path("sweep.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record([
            "t",
            "t_decay",
            "status",
            "nmse",
            "deviation_pct",
            "argmin",
            "error",
        ])?;
        let argmin = self.argmin().map(|(t, d)| d * self.t_axis.len() + t);
        for (i, (c, dv)) in self.cells.iter().zip(&dev).enumerate() {
            w.write_record([
                format!("{:e}", c.t),
                format!("{:e}", c.t_decay),
                if c.nmse.is_some() { "done" } else { "failed" }.to_string(),
                c.nmse.map(|v| format!("{v:e}")).unwrap_or_default(),
                dv.map(|v| format!("{v:e}")).unwrap_or_default(),
                (argmin == Some(i)).to_string(),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        drop(w);
        staging.commit()
    }
}

/// Runs the full cross product of `t_axis` (task-step duration, or T_osc
/// for Rössler) and `decay_axis`. Failed cells are recorded, not fatal.
pub fn sweep_heatmap(
    cfg: &ExperimentConfig,
    t_axis: &[f64],
    decay_axis: &[f64],
) -> Result<SweepResult> {
    if t_axis.is_empty() || decay_axis.is_empty() {
        return Err(Error::Config("sweep axes must be nonempty".into()).in_stage("sweep"));
    }
    let points: Vec<(f64, f64)> = decay_axis
        .iter()
        .flat_map(|&d| t_axis.iter().map(move |&t| (t, d)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(t, d)| {
            let result =
                evaluate_config(&cfg.with_sweep_point(t, d)).map(|(_, o)| o.report.mean_nmse());
            match result {
                Ok(v) => SweepCell {
                    t,
                    t_decay: d,
                    nmse: Some(v),
                    error: None,
                },
                Err(e) => SweepCell {
                    t,
                    t_decay: d,
                    nmse: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepResult {
        t_axis: t_axis.to_vec(),
        decay_axis: decay_axis.to_vec(),
        cells,
    })
}
