//! Relative-state estimation from a nine-sensor pressure array.
//!
//! A downstream body carrying a lateral-line style pressure array senses the
//! wake of an upstream oscillating body; this crate turns those pressure
//! traces into estimates of the seven relative states between the two (the
//! vertical distance, the oscillation amplitude, frequency and offset, and
//! the yaw, pitch, and roll angles).
//!
//! The pipeline, module by module:
//!
//! - [`dataset`]: recording ingestion, Gaussian smoothing, assembly of the
//!   labeled sample set, and seeded stratified splits.
//! - [`synthgen`]: a deterministic synthetic generator with closed-form
//!   ground truth, standing in for flume experiments.
//! - [`sensitivity`]: the two per-sensor sensitivity criteria, sensor
//!   ordering, and the redundancy (sensor-count) sweep.
//! - [`forest`]: random-forest regression with out-of-bag error tracking and
//!   permutation importance.
//! - [`baselines`]: the comparison regressors (backpropagation network,
//!   epsilon-SVR, linear regression with the F-test).
//! - [`evaluate`]: MAE / R^2, the train/test estimation protocol, and the
//!   family comparison grid.
//!
//! Everything stochastic is driven by explicit seeds and counter-derived
//! streams; results are identical for any worker count.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod forest;
pub mod model;
pub mod rng;
pub mod sensitivity;
pub mod synthgen;

pub use dataset::{Recording, Sample, SampleSet, SensorId, StateKind, SENSOR_COUNT};
pub use error::{Error, Result};
pub use model::{FitParams, ModelFamily, TrainedModel};
