use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cavity::CavityConfig;
use crate::error::{Error, Result};
use crate::readout::ReadoutParams;
use crate::ret::EnsembleSpec;
use crate::tasks::TaskSpec;

/// Rössler oscillation period used when the config gives none, s.
pub const DEFAULT_T_OSC: f64 = 250e-12;
/// Task-step duration used when the config gives none, s.
pub const DEFAULT_T_BIN: f64 = 60e-12;
/// Minimum washout in task steps.
pub const MIN_WASHOUT: usize = 50;

/// Waveform and sampling knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    /// Duration of one task step on the waveform, s.
    pub t_bin: Option<f64>,
    /// Rössler only: duration of one nominal oscillation, s. The task step
    /// is `t_osc / samples_per_osc`.
    pub t_osc: Option<f64>,
    /// Waveform sample spacing, s. Default: the largest `t_bin / m` with
    /// `m >= 8` inside the simulator stability limit.
    pub waveform_dt: Option<f64>,
    pub taps_per_bin: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            t_bin: None,
            t_osc: None,
            waveform_dt: None,
            taps_per_bin: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub cavity: u64,
    pub ensemble: u64,
    pub task: u64,
    pub ablation: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            cavity: seed,
            ensemble: seed,
            task: seed,
            ablation: seed,
        }
    }
}

/// Axes of a two-parameter sweep: task-step duration (`T_osc` for
/// Rössler) against cavity decay time, both in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub t_axis: Vec<f64>,
    pub decay_axis: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationPlan {
    pub sizes: Vec<usize>,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
}

fn default_n_seeds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write the full feature matrix (large).
    pub write_features: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            write_features: false,
        }
    }
}

/// One experiment as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    #[serde(default)]
    pub cavity: CavityConfig,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub readout: ReadoutParams,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub ablation: Option<AblationPlan>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(task: TaskSpec) -> Self {
        Self {
            task,
            cavity: CavityConfig::default(),
            ensemble: EnsembleSpec::default(),
            readout: ReadoutParams::default(),
            timing: Timing::default(),
            seeds: Seeds::default(),
            sweep: None,
            ablation: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.cavity.validate().map_err(cfg)?;
        self.ensemble.validate().map_err(cfg)?;
        self.readout.validate()?;
        if self.timing.taps_per_bin == 0 {
            return Err(Error::Config("taps_per_bin must be >= 1".into()));
        }
        for (name, v) in [
            ("t_bin", self.timing.t_bin),
            ("t_osc", self.timing.t_osc),
            ("waveform_dt", self.timing.waveform_dt),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("timing.{name} must be > 0")));
                }
            }
        }
        match self.task {
            TaskSpec::Rossler { .. } => {
                if self.timing.t_bin.is_some() {
                    return Err(Error::Config(
                        "rossler timing is set by t_osc, not t_bin".into(),
                    ));
                }
            }
            TaskSpec::FunctionSimulator { .. } => {
                if self.timing.t_bin.is_some() || self.timing.t_osc.is_some() {
                    return Err(Error::Config(
                        "function_simulator timing is fixed by f0 and samples_per_period".into(),
                    ));
                }
            }
            _ => {
                if self.timing.t_osc.is_some() {
                    return Err(Error::Config(
                        "t_osc applies to the rossler task only".into(),
                    ));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.t_axis.is_empty() || s.decay_axis.is_empty() {
                return Err(Error::Config("sweep axes must be nonempty".into()));
            }
            if s.t_axis.iter().chain(&s.decay_axis).any(|v| !(*v > 0.0)) {
                return Err(Error::Config("sweep axis values must be > 0".into()));
            }
            if matches!(self.task, TaskSpec::FunctionSimulator { .. }) {
                return Err(Error::Config(
                    "function_simulator has no sweepable time axis".into(),
                ));
            }
        }
        if let Some(a) = &self.ablation {
            if a.sizes.is_empty() || a.n_seeds == 0 {
                return Err(Error::Config(
                    "ablation needs sizes and n_seeds >= 1".into(),
                ));
            }
            let full = self.n_features();
            if let Some(bad) = a.sizes.iter().find(|&&n| n == 0 || n > full) {
                return Err(Error::Config(format!(
                    "ablation size {bad} outside 1..={full} (configured N_r)"
                )));
            }
        }
        Ok(())
    }

    /// Configured `N_r`.
    pub fn n_features(&self) -> usize {
        self.ensemble
            .n_features(self.cavity.n_ports, self.timing.taps_per_bin)
    }

    /// Task-step duration on the waveform, s.
    pub fn t_bin(&self) -> f64 {
        match &self.task {
            TaskSpec::Rossler {
                samples_per_osc, ..
            } => self.timing.t_osc.unwrap_or(DEFAULT_T_OSC) / (*samples_per_osc).max(1) as f64,
            task => task
                .native_t_bin()
                .unwrap_or(self.timing.t_bin.unwrap_or(DEFAULT_T_BIN)),
        }
    }

    /// Waveform sample spacing, s.
    pub fn waveform_dt(&self) -> f64 {
        if let Some(dt) = self.timing.waveform_dt {
            return dt;
        }
        let t_bin = self.t_bin();
        let (_, f_max) = self.cavity.band_hz();
        let per_bin = ((t_bin * 20.0 * f_max) * (1.0 - 1e-12)).ceil().max(8.0);
        t_bin / per_bin
    }

    /// Task steps discarded before training and evaluation.
    pub fn washout(&self) -> usize {
        self.readout.washout.unwrap_or_else(|| {
            let steps = (10.0 * self.cavity.t_decay / self.t_bin() - 1e-9).ceil();
            (steps as usize).max(MIN_WASHOUT)
        })
    }

    /// Copy with one cell of a sweep applied.
    pub fn with_sweep_point(&self, t: f64, t_decay: f64) -> Self {
        let mut c = self.clone();
        match c.task {
            TaskSpec::Rossler { .. } => c.timing.t_osc = Some(t),
            _ => c.timing.t_bin = Some(t),
        }
        c.cavity.t_decay = t_decay;
        c.timing.waveform_dt = self.timing.waveform_dt;
        c
    }

    pub fn with_seed_override(mut self, seed: u64) -> Self {
        self.seeds = Seeds::all(seed);
        self
    }

    /// SHA-256 over the canonical JSON form of everything but the output
    /// section. Object keys are sorted, so field order in the source file
    /// does not matter.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        let canonical = serde_json::to_string(&value)?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = r#"
[task]
name = "narma10"
train_len = 500
test_len = 200

[cavity]
t_decay = 5.5e-10
n_ports = 3

[ensemble]
n_boundary = 4
"#;

    const B: &str = r#"
[ensemble]
n_boundary = 4

[cavity]
n_ports = 3
t_decay = 5.5e-10

[task]
test_len = 200
name = "narma10"
train_len = 500

[output]
dir = "elsewhere"
"#;

    #[test]
    fn hash_ignores_field_order_and_output() {
        let a = ExperimentConfig::from_toml_str(A).unwrap();
        let b = ExperimentConfig::from_toml_str(B).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let mut c = a.clone();
        c.seeds.task = 1;
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn timing_defaults() {
        let a = ExperimentConfig::from_toml_str(A).unwrap();
        assert_eq!(a.t_bin(), 60e-12);
        assert_eq!(a.washout(), 92);
        let dt = a.waveform_dt();
        assert!(dt <= 1.0 / (20.0 * 7.5e9));
        assert!((a.t_bin() / dt - 9.0).abs() < 1e-9);
        assert_eq!(a.n_features(), 12);
    }

    #[test]
    fn toml_round_trip() {
        let a = ExperimentConfig::from_toml_str(A).unwrap();
        let text = a.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), a);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("[task]\nname = \"nope\"").is_err());
        assert!(
            ExperimentConfig::from_toml_str("[task]\nname = \"narma10\"\n[cavity]\nbogus = 1")
                .is_err()
        );
        let sweep = format!("{A}\n[sweep]\nt_axis = []\ndecay_axis = [1e-10]\n");
        assert!(ExperimentConfig::from_toml_str(&sweep).is_err());
        let abl = format!("{A}\n[ablation]\nsizes = [13]\n");
        assert!(ExperimentConfig::from_toml_str(&abl).is_err());
        let seed = format!("{A}\nseed = 3\n");
        assert!(ExperimentConfig::from_toml_str(&seed).is_err());
    }
}
