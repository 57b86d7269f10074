//! Reservoir enhancement: many virtual reservoirs from one cavity via
//! boundary perturbation and frequency stirring, with their port features
//! concatenated into one [`FeatureMatrix`].

mod features;
mod stir;

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{FeatureLabel, FeatureMatrix, BIAS_LABEL};
pub use stir::{default_betas, frequency_stir, stirred_len};

use crate::cavity::{normalize_rows, sample_ports, simulate, standard_normal, ModalReservoir};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// How many virtual reservoirs to build and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_boundary: usize,
    pub n_freq: usize,
    /// Perturbation strength in `[0, 1]`: frequency jitter in units of the
    /// mean mode spacing, and coupling mixing angle in units of `pi / 2`.
    pub perturb_strength: f64,
    /// Time-scale factors, one per frequency member. Empty means
    /// [`default_betas`] with `stir_f0` and `stir_step`.
    pub beta_list: Vec<f64>,
    pub stir_f0: f64,
    pub stir_step: f64,
    /// Set from the experiment's seed table, not from config text.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            n_boundary: 1,
            n_freq: 1,
            perturb_strength: 1.0,
            beta_list: Vec::new(),
            stir_f0: 4e9,
            stir_step: 100e6,
            seed: 0,
        }
    }
}

impl EnsembleSpec {
    pub fn new(n_boundary: usize, n_freq: usize, seed: u64) -> Self {
        Self {
            n_boundary,
            n_freq,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_boundary == 0 || self.n_freq == 0 {
            return Err(Error::invalid("n_boundary and n_freq must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.perturb_strength) {
            return Err(Error::invalid("perturb_strength must be in [0, 1]"));
        }
        let betas = self.betas();
        if betas.len() != self.n_freq {
            return Err(Error::invalid(format!(
                "{} betas given for n_freq = {}",
                betas.len(),
                self.n_freq
            )));
        }
        if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::invalid("every beta must be > 0"));
        }
        let mut sorted = betas.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("beta values must be distinct"));
        }
        Ok(())
    }

    pub fn betas(&self) -> Vec<f64> {
        if self.beta_list.is_empty() {
            default_betas(self.n_freq, self.stir_f0, self.stir_step)
        } else {
            self.beta_list.clone()
        }
    }

    pub fn n_members(&self) -> usize {
        self.n_boundary * self.n_freq
    }

    /// `N_0 N_b N_f taps`.
    pub fn n_features(&self, n_ports: usize, taps_per_bin: usize) -> usize {
        n_ports * self.n_members() * taps_per_bin
    }
}

/// A perturbed copy of `base`: mode frequencies jittered by
/// `N(0, (strength * spacing)^2)` and folded back into the band, couplings
/// rotated toward a fresh Gaussian draw by `theta = strength * pi / 2`.
/// Port-coupling rows are renormalised. `(seed, index)` selects the draw.
pub fn boundary_perturb<T: Scalar>(
    base: &ModalReservoir<T>,
    strength: f64,
    index: usize,
    seed: u64,
) -> Result<ModalReservoir<T>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::invalid(format!(
            "strength must be in [0, 1], got {strength}"
        )));
    }
    let mut out = base.clone();
    if strength == 0.0 {
        return Ok(out);
    }
    let sigma = strength * base.mean_spacing();
    let (lo, hi) = base.band();
    let theta = strength * PI / 2.0;
    let (cos, sin) = (T::lit(theta.cos()), T::lit(theta.sin()));
    let mut rng = seeded(seed, 0x5045_5254_0000_0000 | index as u64);

    let (freqs, input, ports) = out.parts_mut();
    for w in freqs.iter_mut() {
        let jittered = w.to_f64_lossy() + sigma * standard_normal(&mut rng);
        *w = T::lit(fold_into(jittered, lo, hi));
    }
    for b in input.iter_mut() {
        *b = cos * *b + sin * T::lit(standard_normal(&mut rng));
    }
    for c in ports.iter_mut() {
        *c = cos * *c + sin * T::lit(standard_normal(&mut rng));
    }
    normalize_rows(ports);
    Ok(out)
}

/// Reflects `x` at the band edges until it lies in `[lo, hi]`.
fn fold_into(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let period = 2.0 * width;
    let r = (x - lo).rem_euclid(period);
    lo + if r <= width { r } else { period - r }
}

/// Member `(boundary, frequency)` of an ensemble; boundary index 0 is the
/// base cavity itself.
pub fn member_reservoir<T: Scalar>(
    base: &ModalReservoir<T>,
    spec: &EnsembleSpec,
    boundary: usize,
) -> Result<ModalReservoir<T>> {
    if boundary == 0 {
        Ok(base.clone())
    } else {
        boundary_perturb(base, spec.perturb_strength, boundary, spec.seed)
    }
}

/// Simulates one reservoir on a drive and samples its diode-mapped ports
/// at task-step boundaries, `n_bins` columns.
fn member_features<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    drive: &TimeSeries<T>,
    t_bin: f64,
    taps_per_bin: usize,
    n_bins: usize,
) -> Result<ndarray::Array2<T>> {
    let trace = simulate(reservoir, drive)?;
    let sampled = sample_ports(&trace, t_bin, taps_per_bin)?;
    if sampled.ncols() < n_bins {
        return Err(Error::invalid(format!(
            "member yields {} task steps, expected {n_bins}",
            sampled.ncols()
        )));
    }
    Ok(sampled.slice(ndarray::s![.., ..n_bins]).to_owned())
}

/// Runs every `(boundary, frequency)` member on the (stirred) drive and
/// stacks their port features, boundary-major, then frequency, port, tap.
/// Members run in parallel on the current rayon pool; the result does not
/// depend on scheduling.
pub fn run_ensemble<T: Scalar>(
    base: &ModalReservoir<T>,
    spec: &EnsembleSpec,
    drive: &TimeSeries<T>,
    t_bin: f64,
    taps_per_bin: usize,
) -> Result<FeatureMatrix<T>> {
    run_ensemble_with(base, spec, drive, t_bin, taps_per_bin, true)
}

/// [`run_ensemble`] with members evaluated one after another.
pub fn run_ensemble_serial<T: Scalar>(
    base: &ModalReservoir<T>,
    spec: &EnsembleSpec,
    drive: &TimeSeries<T>,
    t_bin: f64,
    taps_per_bin: usize,
) -> Result<FeatureMatrix<T>> {
    run_ensemble_with(base, spec, drive, t_bin, taps_per_bin, false)
}

fn run_ensemble_with<T: Scalar>(
    base: &ModalReservoir<T>,
    spec: &EnsembleSpec,
    drive: &TimeSeries<T>,
    t_bin: f64,
    taps_per_bin: usize,
    parallel: bool,
) -> Result<FeatureMatrix<T>> {
    spec.validate()?;
    if drive.n_channels() != 1 {
        return Err(Error::invalid("ensemble drive must have one channel"));
    }
    let n_bins = (drive.duration() / t_bin + 1e-9).floor() as usize;
    let betas = spec.betas();
    let stirred: Vec<(TimeSeries<T>, f64)> = betas
        .iter()
        .map(|&beta| {
            let s = frequency_stir(drive, beta)?;
            let realised = s.len() as f64 / drive.len() as f64;
            Ok((s, t_bin * realised))
        })
        .collect::<Result<_>>()?;

    let members: Vec<(usize, usize)> = (0..spec.n_boundary)
        .flat_map(|b| (0..spec.n_freq).map(move |f| (b, f)))
        .collect();
    let eval = |&(b, f): &(usize, usize)| -> Result<ndarray::Array2<T>> {
        let wrap = |e: Error| Error::Member {
            boundary: b,
            frequency: f,
            source: Box::new(e),
        };
        let reservoir = member_reservoir(base, spec, b).map_err(wrap)?;
        let (drive, bin) = &stirred[f];
        member_features(&reservoir, drive, *bin, taps_per_bin, n_bins).map_err(wrap)
    };
    let blocks: Vec<ndarray::Array2<T>> = if parallel {
        members.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        members.iter().map(eval).collect::<Result<_>>()?
    };

    let n_ports = base.n_ports();
    let rows_per_member = n_ports * taps_per_bin;
    let mut data = ndarray::Array2::zeros((members.len() * rows_per_member, n_bins));
    let mut labels = Vec::with_capacity(data.nrows());
    for (m, (&(b, f), block)) in members.iter().zip(&blocks).enumerate() {
        data.slice_mut(ndarray::s![
            m * rows_per_member..(m + 1) * rows_per_member,
            ..
        ])
        .assign(block);
        for port in 0..n_ports {
            for tap in 0..taps_per_bin {
                labels.push(FeatureLabel {
                    boundary: b,
                    frequency: f,
                    port,
                    tap,
                });
            }
        }
    }
    FeatureMatrix::from_features(data, labels)
}

/// Nested random subset of `target_nr` feature rows (bias kept). For one
/// seed, the rows kept at size `n` are a subset of those kept at any
/// larger size; kept rows stay in their original order.
pub fn ablate<T: Scalar>(
    features: &FeatureMatrix<T>,
    target_nr: usize,
    seed: u64,
) -> Result<FeatureMatrix<T>> {
    let n = features.n_features();
    if target_nr == 0 || target_nr > n {
        return Err(Error::invalid(format!(
            "target_nr must be in 1..={n}, got {target_nr}"
        )));
    }
    if target_nr == n {
        return Ok(features.clone());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed, 0x4142_4c41));
    let mut keep = order[..target_nr].to_vec();
    keep.sort_unstable();
    features.select_features(&keep)
}
