//! Reverberant cavity model: a bank of independent damped driven modes,
//! observed through linear port superposition and a memoryless diode.

mod build;
mod diode;
mod echo;
mod sample;
mod sim;

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use build::{
    build_cavity, weyl_mode_count, wigner_spacing, CavityConfig, MIN_MODES, SPEED_OF_LIGHT,
};
pub(crate) use build::{normalize_rows, standard_normal};
pub use diode::{diode, DiodeParams};
pub use echo::{echo_state_check, EchoState, CONVERGENCE_TOL};
pub use sample::sample_ports;
pub use sim::{calibrate_diode, simulate, simulate_linear, stability_limit, ModalState, Simulator};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const FORMAT: &str = "reverb-rc/modal-reservoir";
const FORMAT_VERSION: u32 = 1;

/// A realized cavity. Immutable once built; simulations keep their own state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalReservoir<T> {
    mode_freqs: Vec<T>,
    damping_rate: T,
    input_couplings: Vec<T>,
    port_couplings: Array2<T>,
    diode: DiodeParams<T>,
    band: (f64, f64),
    seed: u64,
}

impl<T: Scalar> ModalReservoir<T> {
    /// Assembles a reservoir from explicit parts. Frequencies are angular
    /// (rad/s), `band` is the angular band the modes live in.
    pub fn from_parts(
        mode_freqs: Vec<T>,
        damping_rate: T,
        input_couplings: Vec<T>,
        port_couplings: Array2<T>,
        diode: DiodeParams<T>,
        band: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        let k = mode_freqs.len();
        if k == 0 {
            return Err(Error::invalid("reservoir needs at least one mode"));
        }
        if input_couplings.len() != k || port_couplings.ncols() != k {
            return Err(Error::DimensionMismatch {
                left: format!("{k} modes"),
                right: format!(
                    "{} input couplings, {} port-coupling columns",
                    input_couplings.len(),
                    port_couplings.ncols()
                ),
            });
        }
        if port_couplings.nrows() == 0 {
            return Err(Error::invalid("reservoir needs at least one port"));
        }
        if !(damping_rate > T::zero()) {
            return Err(Error::invalid("damping rate must be > 0"));
        }
        if mode_freqs.iter().any(|w| !(*w > T::zero()))
            || input_couplings
                .iter()
                .chain(port_couplings.iter())
                .any(|v| !v.is_finite())
        {
            return Err(Error::invalid(
                "mode frequencies must be > 0 and couplings finite",
            ));
        }
        Ok(Self {
            mode_freqs,
            damping_rate,
            input_couplings,
            port_couplings,
            diode,
            band,
            seed,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mode_freqs.len()
    }

    pub fn n_ports(&self) -> usize {
        self.port_couplings.nrows()
    }

    /// Angular mode frequencies, rad/s.
    pub fn mode_freqs(&self) -> &[T] {
        &self.mode_freqs
    }

    pub fn damping_rate(&self) -> T {
        self.damping_rate
    }

    pub fn input_couplings(&self) -> &[T] {
        &self.input_couplings
    }

    /// `n_ports x n_modes`, unit-norm rows.
    pub fn port_couplings(&self) -> &Array2<T> {
        &self.port_couplings
    }

    pub fn diode(&self) -> &DiodeParams<T> {
        &self.diode
    }

    /// Angular band edges, rad/s.
    pub fn band(&self) -> (f64, f64) {
        self.band
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean nearest-neighbour spacing, rad/s.
    pub fn mean_spacing(&self) -> f64 {
        (self.band.1 - self.band.0) / self.n_modes() as f64
    }

    /// Mode count per `width_hz` of bandwidth.
    pub fn modes_per_band(&self, width_hz: f64) -> f64 {
        let band_hz = (self.band.1 - self.band.0) / (2.0 * std::f64::consts::PI);
        self.n_modes() as f64 * width_hz / band_hz
    }

    pub fn with_diode(mut self, diode: DiodeParams<T>) -> Self {
        self.diode = diode;
        self
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<T>, &mut Vec<T>, &mut Array2<T>) {
        (
            &mut self.mode_freqs,
            &mut self.input_couplings,
            &mut self.port_couplings,
        )
    }

    pub fn to_file(&self) -> ReservoirFile<T> {
        ReservoirFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            seed: self.seed,
            band_rad_per_s: [self.band.0, self.band.1],
            damping_rate: self.damping_rate,
            mode_freqs: self.mode_freqs.clone(),
            input_couplings: self.input_couplings.clone(),
            port_couplings: self
                .port_couplings
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            diode: self.diode,
        }
    }

    pub fn from_file(file: ReservoirFile<T>) -> Result<Self> {
        if file.format != FORMAT || file.version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported reservoir file {} v{}",
                file.format, file.version
            )));
        }
        let k = file.mode_freqs.len();
        let rows = file.port_couplings.len();
        let flat: Vec<T> = file.port_couplings.into_iter().flatten().collect();
        let ports = Array2::from_shape_vec((rows, k), flat)
            .map_err(|e| Error::invalid(format!("port couplings: {e}")))?;
        Self::from_parts(
            file.mode_freqs,
            file.damping_rate,
            file.input_couplings,
            ports,
            file.diode,
            (file.band_rad_per_s[0], file.band_rad_per_s[1]),
            file.seed,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_str(&text)?)
    }
}

/// Versioned on-disk form of a [`ModalReservoir`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReservoirFile<T> {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub band_rad_per_s: [f64; 2],
    pub damping_rate: T,
    pub mode_freqs: Vec<T>,
    pub input_couplings: Vec<T>,
    pub port_couplings: Vec<Vec<T>>,
    pub diode: DiodeParams<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_exact() {
        let r = build_cavity::<f64>(&CavityConfig::default(), 3).unwrap();
        let text = serde_json::to_string(&r.to_file()).unwrap();
        let back = ModalReservoir::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_wrong_version() {
        let r = build_cavity::<f64>(&CavityConfig::default(), 3).unwrap();
        let mut f = r.to_file();
        f.version = 99;
        assert!(ModalReservoir::from_file(f).is_err());
    }

    #[test]
    fn modes_per_100mhz() {
        let cfg = CavityConfig {
            bandwidth: 4e9,
            ..Default::default()
        };
        let r = build_cavity::<f64>(&cfg, 0).unwrap();
        assert!((r.modes_per_band(100e6) - 3.2).abs() < 0.1);
    }
}
