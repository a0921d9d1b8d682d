//! The three comparison regressors: a backpropagation network, epsilon-SVR
//! with an RBF kernel, and multiple linear regression with the F-test.

pub mod dist;

mod bpnn;
mod linreg;
mod svr;

pub use bpnn::{
    bpnn_preset, fit_bpnn, init_network, sweep_bpnn, Network, NetworkGradient, SweepAxis,
    SweepResult, SWEEP_R2_TOLERANCE,
};
pub use linreg::{fit_linreg, LinearModel, F_TEST_ALPHA};
pub use svr::{fit_svr, SvrFitError, SvrModel, SvrParams};
