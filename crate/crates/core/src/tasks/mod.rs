//! Benchmark task generators: input/target pairs for the five tasks and
//! the zero-order-hold waveform encoder.

mod encode;
mod function_sim;
mod henon;
mod narma;
mod nce;
mod rossler;

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};

pub use crate::spectrum::estimate_t_osc;
pub use encode::encode_waveform;
pub use function_sim::{function_simulator_pair, function_simulator_with};
pub use henon::{henon_orbit, henon_step};
pub use narma::{narma10_pair, narma10_target};
pub use nce::{nce_channel, nce_sequences, CHANNEL_TAPS, SYMBOLS};
pub use rossler::{rossler_trajectory, RosslerParams, NOMINAL_T_OSC, STEPS_PER_T_OSC};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Guard samples appended after the NCE test window so the channel's
/// look-ahead taps never read past the generated range.
pub const NCE_GUARD: usize = 10;

/// Task selection plus its parameters, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Observe Rössler x, infer y and z.
    Rossler {
        #[serde(default = "default_samples_per_osc")]
        samples_per_osc: usize,
        #[serde(default = "default_train_periods")]
        train_periods: usize,
        #[serde(default = "default_test_periods")]
        test_periods: usize,
        #[serde(default)]
        params: RosslerParams,
    },
    /// Observe Hénon x, infer y.
    Henon {
        #[serde(default = "default_train")]
        train_len: usize,
        #[serde(default = "default_test")]
        test_len: usize,
        #[serde(default = "default_henon_x0")]
        x0: f64,
        #[serde(default = "default_henon_x0")]
        y0: f64,
    },
    /// Recover 4-level symbols from the multipath channel output.
    Nce {
        #[serde(default = "default_train")]
        train_len: usize,
        #[serde(default = "default_test")]
        test_len: usize,
        #[serde(default)]
        noise_snr_db: Option<f64>,
    },
    /// Sine in, sin^3 out.
    FunctionSimulator {
        #[serde(default = "default_f0")]
        f0: f64,
        #[serde(default = "default_n_periods")]
        n_periods: usize,
        #[serde(default = "default_spp")]
        samples_per_period: usize,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
    Narma10 {
        #[serde(default = "default_train")]
        train_len: usize,
        #[serde(default = "default_test")]
        test_len: usize,
    },
}

fn default_samples_per_osc() -> usize {
    20
}
fn default_train_periods() -> usize {
    200
}
fn default_test_periods() -> usize {
    50
}
fn default_train() -> usize {
    4000
}
fn default_test() -> usize {
    1000
}
fn default_henon_x0() -> f64 {
    0.1
}
fn default_f0() -> f64 {
    4e9
}
fn default_n_periods() -> usize {
    300
}
fn default_spp() -> usize {
    16
}
fn default_train_fraction() -> f64 {
    0.8
}

impl TaskSpec {
    /// Default parameters for a task by its config name.
    pub fn by_name(name: &str) -> Result<Self> {
        let table = format!("name = \"{name}\"");
        toml::from_str(&table).map_err(|_| {
            Error::Config(format!(
                "unknown task `{name}` (expected rossler, henon, nce, function_simulator, narma10)"
            ))
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Rossler { .. } => "rossler",
            TaskSpec::Henon { .. } => "henon",
            TaskSpec::Nce { .. } => "nce",
            TaskSpec::FunctionSimulator { .. } => "function_simulator",
            TaskSpec::Narma10 { .. } => "narma10",
        }
    }

    /// Task-step duration fixed by the task itself, if any.
    pub fn native_t_bin(&self) -> Option<f64> {
        match self {
            TaskSpec::FunctionSimulator {
                f0,
                samples_per_period,
                ..
            } => Some(1.0 / (f0 * *samples_per_period as f64)),
            _ => None,
        }
    }

    /// Output levels for symbol tasks.
    pub fn symbol_levels(&self) -> Option<Vec<f64>> {
        matches!(self, TaskSpec::Nce { .. }).then(|| SYMBOLS.to_vec())
    }

    /// Generates `washout + train + test` aligned samples.
    pub fn generate<T: Scalar>(&self, washout: usize, seed: u64) -> Result<TaskDataset<T>> {
        match *self {
            TaskSpec::Rossler {
                samples_per_osc,
                train_periods,
                test_periods,
                params,
            } => {
                if samples_per_osc == 0 || samples_per_osc > STEPS_PER_T_OSC {
                    return Err(Error::Config(format!(
                        "samples_per_osc must be in 1..={STEPS_PER_T_OSC}"
                    )));
                }
                let stride = (STEPS_PER_T_OSC as f64 / samples_per_osc as f64).round() as usize;
                let train = train_periods * samples_per_osc;
                let test = test_periods * samples_per_osc;
                let n = washout + train + test;
                let full = rossler_trajectory::<T>(&params, n * stride)?;
                let picks: Vec<usize> = (0..n).map(|i| i * stride).collect();
                let values = full.values().select(Axis(1), &picks);
                let dt = params.dt * stride as f64;
                let traj = TimeSeries::with_names(full.names().to_vec(), values, dt)?;
                TaskDataset::new(
                    traj.select_channels(&[0])?,
                    traj.select_channels(&[1, 2])?,
                    washout,
                    train,
                    test,
                )
            }
            TaskSpec::Henon {
                train_len,
                test_len,
                x0,
                y0,
            } => {
                let orbit = henon_orbit(washout + train_len + test_len, T::lit(x0), T::lit(y0))?;
                TaskDataset::new(
                    orbit.select_channels(&[0])?,
                    orbit.select_channels(&[1])?,
                    washout,
                    train_len,
                    test_len,
                )
            }
            TaskSpec::Nce {
                train_len,
                test_len,
                noise_snr_db,
            } => {
                let n = washout.max(NCE_GUARD) + train_len + test_len + NCE_GUARD;
                let (d, q) = nce_sequences(n, seed, noise_snr_db)?;
                TaskDataset::new(q, d, washout.max(NCE_GUARD), train_len, test_len)
            }
            TaskSpec::FunctionSimulator {
                f0,
                n_periods,
                samples_per_period,
                train_fraction,
            } => {
                let (u, s) = function_simulator_pair(f0, n_periods, samples_per_period)?;
                let usable = u.len().checked_sub(washout).ok_or_else(|| {
                    Error::Config(format!(
                        "function simulator: {} samples shorter than washout {washout}",
                        u.len()
                    ))
                })?;
                if !(0.0..=1.0).contains(&train_fraction) {
                    return Err(Error::Config("train_fraction must be in [0, 1]".into()));
                }
                let train = (usable as f64 * train_fraction).round() as usize;
                let test = usable - train;
                if train == 0 || test == 0 {
                    return Err(Error::Config(format!(
                        "function simulator split is degenerate: {train} train / {test} test samples"
                    )));
                }
                TaskDataset::new(u, s, washout, train, test)
            }
            TaskSpec::Narma10 {
                train_len,
                test_len,
            } => {
                let (u, y) = narma10_pair(washout + train_len + test_len, seed)?;
                TaskDataset::new(u, y, washout, train_len, test_len)
            }
        }
    }
}

/// Aligned input/target series with washout, training and test windows laid
/// out consecutively from sample 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset<T> {
    pub input: TimeSeries<T>,
    pub target: TimeSeries<T>,
    pub washout_len: usize,
    pub train_len: usize,
    pub test_len: usize,
}

impl<T: Scalar> TaskDataset<T> {
    pub fn new(
        input: TimeSeries<T>,
        target: TimeSeries<T>,
        washout_len: usize,
        train_len: usize,
        test_len: usize,
    ) -> Result<Self> {
        if input.len() != target.len() {
            return Err(Error::DimensionMismatch {
                left: format!("input {} samples", input.len()),
                right: format!("target {} samples", target.len()),
            });
        }
        if washout_len + train_len + test_len > input.len() {
            return Err(Error::invalid(format!(
                "windows {washout_len}+{train_len}+{test_len} exceed {} samples",
                input.len()
            )));
        }
        Ok(Self {
            input,
            target,
            washout_len,
            train_len,
            test_len,
        })
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        self.washout_len..self.washout_len + self.train_len
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        let start = self.washout_len + self.train_len;
        start..start + self.test_len
    }

    /// One CSV with `input.<name>` and `target.<name>` columns; the metadata
    /// row carries `#dt=`, `#washout=`, `#train=`, `#test=`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        let header: Vec<String> = self
            .input
            .names()
            .iter()
            .map(|n| format!("input.{n}"))
            .chain(self.target.names().iter().map(|n| format!("target.{n}")))
            .collect();
        w.write_record(&header)?;
        w.write_record([
            format!("#dt={:e}", self.input.dt()),
            format!("#washout={}", self.washout_len),
            format!("#train={}", self.train_len),
            format!("#test={}", self.test_len),
        ])?;
        let all = concatenate(
            Axis(0),
            &[self.input.values().view(), self.target.values().view()],
        )
        .expect("aligned series");
        for col in all.columns() {
            w.write_record(col.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut reader: R, origin: &Path) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::io(origin, e))?;
        let all = TimeSeries::<T>::read_csv(text.as_bytes(), origin)?;
        let meta_line = text.lines().nth(1).unwrap_or_default();
        let field = |key: &str| -> Result<usize> {
            meta_line
                .split(',')
                .find_map(|f| f.trim().strip_prefix(key))
                .ok_or_else(|| Error::Parse {
                    path: origin.to_path_buf(),
                    line: 2,
                    msg: format!("missing `{key}<n>`"),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    line: 2,
                    msg: format!("{key}: {e}"),
                })
        };
        let (washout, train, test) = (field("#washout=")?, field("#train=")?, field("#test=")?);
        let split = |prefix: &str| -> Vec<usize> {
            all.names()
                .iter()
                .enumerate()
                .filter(|(_, n)| n.starts_with(prefix))
                .map(|(i, _)| i)
                .collect()
        };
        let (ins, outs) = (split("input."), split("target."));
        if ins.is_empty() || outs.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                msg: "need at least one input.* and one target.* column".into(),
            });
        }
        let strip = |ts: TimeSeries<T>, prefix: &str| -> Result<TimeSeries<T>> {
            let names = ts
                .names()
                .iter()
                .map(|n| n.trim_start_matches(prefix).to_string())
                .collect();
            let dt = ts.dt();
            TimeSeries::with_names(names, ts.into_values(), dt)
        };
        Self::new(
            strip(all.select_channels(&ins)?, "input.")?,
            strip(all.select_channels(&outs)?, "target.")?,
            washout,
            train,
            test,
        )
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn by_name_applies_defaults() {
        let t = TaskSpec::by_name("narma10").unwrap();
        assert_eq!(
            t,
            TaskSpec::Narma10 {
                train_len: 4000,
                test_len: 1000
            }
        );
        assert!(TaskSpec::by_name("lorenz").is_err());
    }

    #[test]
    fn dataset_windows() {
        let ds = TaskSpec::by_name("henon")
            .unwrap()
            .generate::<f64>(50, 1)
            .unwrap();
        assert_eq!(ds.input.len(), 5050);
        assert_eq!(ds.train_range(), 50..4050);
        assert_eq!(ds.test_range(), 4050..5050);
    }

    #[test]
    fn nce_has_guard_samples() {
        let ds = TaskSpec::by_name("nce")
            .unwrap()
            .generate::<f64>(50, 1)
            .unwrap();
        assert_eq!(ds.input.len(), 50 + 5000 + NCE_GUARD);
        assert_eq!(ds.input.names(), ["q"]);
        assert_eq!(ds.target.names(), ["d"]);
    }

    #[test]
    fn zero_test_split_is_config_error() {
        let t = TaskSpec::FunctionSimulator {
            f0: 4e9,
            n_periods: 300,
            samples_per_period: 16,
            train_fraction: 1.0,
        };
        assert!(matches!(t.generate::<f64>(100, 0), Err(Error::Config(_))));
    }

    #[test]
    fn rossler_dataset_shapes() {
        let t = TaskSpec::Rossler {
            samples_per_osc: 20,
            train_periods: 4,
            test_periods: 1,
            params: RosslerParams {
                transient_steps: 0,
                ..Default::default()
            },
        };
        let ds = t.generate::<f64>(10, 0).unwrap();
        assert_eq!(ds.input.len(), 110);
        assert_eq!(ds.target.n_channels(), 2);
        assert!((ds.input.dt() - NOMINAL_T_OSC / 20.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_csv_round_trip() {
        let ds = TaskSpec::by_name("narma10")
            .unwrap()
            .generate::<f64>(50, 4)
            .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = TaskDataset::<f64>::read_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, ds);
    }
}
