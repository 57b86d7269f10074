use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diode::DiodeParams;
use super::ModalReservoir;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum mode count accepted by [`build_cavity`].
pub const MIN_MODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    /// Cavity area, m^2.
    pub area: f64,
    /// Band center, Hz.
    pub f0: f64,
    /// Band width, Hz.
    pub bandwidth: f64,
    /// Field-amplitude e-folding time of the undriven cavity, s.
    pub t_decay: f64,
    pub n_ports: usize,
    pub mode_density_scale: f64,
    pub diode_alpha: f64,
    /// Diode knee. The harness normalises the drive so the linear port RMS
    /// is 1 and reads this in those units (default 0.01).
    pub diode_epsilon: Option<f64>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            area: 0.115,
            f0: 4e9,
            bandwidth: 7e9,
            t_decay: 550e-12,
            n_ports: 3,
            mode_density_scale: 1.0,
            diode_alpha: 0.1,
            diode_epsilon: None,
        }
    }
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.area > 0.0) {
            return bad(format!("area must be > 0, got {}", self.area));
        }
        if !(self.bandwidth > 0.0) {
            return bad(format!("bandwidth must be > 0, got {}", self.bandwidth));
        }
        if !(self.f0 - self.bandwidth / 2.0 > 0.0) {
            return bad("band must lie above 0 Hz (f0 - B/2 > 0)".into());
        }
        if !(self.t_decay > 0.0) {
            return bad(format!("t_decay must be > 0, got {}", self.t_decay));
        }
        if self.n_ports == 0 {
            return bad("need at least one port".into());
        }
        if !(self.mode_density_scale >= 0.0) {
            return bad("mode_density_scale must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.diode_alpha) {
            return bad(format!(
                "diode_alpha must be in [0, 1], got {}",
                self.diode_alpha
            ));
        }
        Ok(())
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (
            self.f0 - self.bandwidth / 2.0,
            self.f0 + self.bandwidth / 2.0,
        )
    }

    /// Amplitude damping rate: the field envelope decays as `exp(-t / t_decay)`.
    pub fn damping_rate(&self) -> f64 {
        1.0 / self.t_decay
    }
}

/// Two-dimensional Weyl estimate of the number of modes in a band:
/// `2 pi A f0 B / c^2`.
pub fn weyl_mode_count(area: f64, f0: f64, bandwidth: f64) -> f64 {
    2.0 * PI * area * f0 * bandwidth / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// Draws a nearest-neighbour spacing from the Wigner surmise
/// `P(s) = (pi s / 2) exp(-pi s^2 / 4)` by inverting its CDF.
pub fn wigner_spacing<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    (-4.0 * (1.0 - u).ln() / PI).sqrt()
}

/// Mode frequencies (Hz) in `[f_lo, f_hi]` whose unfolded spacings follow
/// the Wigner surmise. Unfolding uses the Weyl staircase `N(f) ~ f^2`.
pub(crate) fn unfolded_frequencies<R: Rng>(
    rng: &mut R,
    k: usize,
    f_lo: f64,
    f_hi: f64,
) -> Vec<f64> {
    let spacings: Vec<f64> = (0..=k).map(|_| wigner_spacing(rng)).collect();
    let total: f64 = spacings.iter().sum();
    let mut acc = 0.0;
    spacings[..k]
        .iter()
        .map(|s| {
            acc += s;
            let x = acc / total;
            (f_lo * f_lo + x * (f_hi * f_hi - f_lo * f_lo)).sqrt()
        })
        .collect()
}

pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Builds a random-wave cavity: Weyl-law mode count, Wigner-unfolded mode
/// frequencies, Gaussian input couplings and unit-norm port coupling rows.
pub fn build_cavity<T: Scalar>(config: &CavityConfig, seed: u64) -> Result<ModalReservoir<T>> {
    config.validate()?;
    let (f_lo, f_hi) = config.band_hz();
    let k = (config.mode_density_scale * weyl_mode_count(config.area, config.f0, config.bandwidth))
        .round() as usize;
    if k < MIN_MODES {
        return Err(Error::BandTooNarrow { modes: k });
    }
    let freqs = unfolded_frequencies(&mut seeded(seed, 1), k, f_lo, f_hi);
    let mut rng = seeded(seed, 2);
    let input: Vec<T> = (0..k).map(|_| T::lit(standard_normal(&mut rng))).collect();
    let mut rng = seeded(seed, 3);
    let mut ports = Array2::<T>::zeros((config.n_ports, k));
    for mut row in ports.rows_mut() {
        for v in row.iter_mut() {
            *v = T::lit(standard_normal(&mut rng));
        }
    }
    normalize_rows(&mut ports);
    // Epsilon is a placeholder until calibrated against a drive.
    let diode = DiodeParams::new(
        T::lit(config.diode_alpha),
        T::lit(config.diode_epsilon.unwrap_or(1.0)),
    )?;
    ModalReservoir::from_parts(
        freqs.iter().map(|f| T::lit(2.0 * PI * f)).collect(),
        T::lit(config.damping_rate()),
        input,
        ports,
        diode,
        (2.0 * PI * f_lo, 2.0 * PI * f_hi),
        seed,
    )
}

pub(crate) fn normalize_rows<T: Scalar>(m: &mut Array2<T>) {
    for mut row in m.rows_mut() {
        let norm = row.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norm > T::zero() {
            row.mapv_inplace(|v| v / norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_counts() {
        let narrow = weyl_mode_count(0.115, 4e9, 100e6);
        assert!((narrow - 3.21).abs() < 0.01, "{narrow}");
        let wide = weyl_mode_count(0.115, 4e9, 4e9);
        // 2 pi * 0.115 * 16e18 / c^2
        assert!((wide - 128.6).abs() < 0.1, "{wide}");
    }

    #[test]
    fn narrow_band_is_rejected_with_count() {
        let cfg = CavityConfig {
            bandwidth: 100e6,
            ..Default::default()
        };
        match build_cavity::<f64>(&cfg, 0) {
            Err(Error::BandTooNarrow { modes }) => assert_eq!(modes, 3),
            other => panic!("{other:?}"),
        }
        let zero = CavityConfig {
            mode_density_scale: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            build_cavity::<f64>(&zero, 0),
            Err(Error::BandTooNarrow { modes: 0 })
        ));
    }

    #[test]
    fn reservoir_invariants() {
        let cfg = CavityConfig {
            bandwidth: 4e9,
            ..Default::default()
        };
        let r = build_cavity::<f64>(&cfg, 11).unwrap();
        assert_eq!(r.n_modes(), 129);
        let (lo, hi) = r.band();
        assert!(r.mode_freqs().iter().all(|w| *w >= lo && *w <= hi));
        assert!(r.mode_freqs().windows(2).all(|w| w[0] < w[1]));
        for row in r.port_couplings().rows() {
            let n: f64 = row.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!((r.damping_rate() - 1.0 / 550e-12).abs() < 1.0);
    }

    #[test]
    fn same_seed_same_cavity() {
        let cfg = CavityConfig::default();
        let a = build_cavity::<f64>(&cfg, 5).unwrap();
        let b = build_cavity::<f64>(&cfg, 5).unwrap();
        let c = build_cavity::<f64>(&cfg, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn wigner_spacing_moments() {
        // Mean 1, second moment 4/pi.
        let mut rng = seeded(1, 0);
        let n = 200_000;
        let s: Vec<f64> = (0..n).map(|_| wigner_spacing(&mut rng)).collect();
        let m1 = s.iter().sum::<f64>() / n as f64;
        let m2 = s.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((m1 - 1.0).abs() < 0.01, "{m1}");
        assert!((m2 - 4.0 / PI).abs() < 0.01, "{m2}");
    }
}
