//! Simulation and benchmarking of reservoir computing with a reverberant
//! microwave cavity: a modal cavity model with diode port readouts,
//! ensemble enlargement by boundary perturbation and frequency stirring,
//! ridge readouts, benchmark task generators and an experiment harness.
//!
//! The numerical core is generic over [`scalar::Scalar`] (`f32`, `f64`);
//! the harness works in [`Real`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod error;
pub mod harness;
pub mod readout;
pub mod ret;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod spectrum;
pub mod tasks;

pub use error::{Error, Result};

/// Scalar used by the harness and CLI.
pub type Real = f64;

pub type Series = series::TimeSeries<Real>;
pub type Reservoir = cavity::ModalReservoir<Real>;
pub type Features = ret::FeatureMatrix<Real>;
pub type Weights = readout::ReadoutWeights<Real>;
pub type Dataset = tasks::TaskDataset<Real>;

pub type Series32 = series::TimeSeries<f32>;
pub type Reservoir32 = cavity::ModalReservoir<f32>;
pub type Features32 = ret::FeatureMatrix<f32>;
pub type Weights32 = readout::ReadoutWeights<f32>;
