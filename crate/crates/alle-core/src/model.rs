//! Unified fit/predict surface over the four model families.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    bpnn_preset, fit_bpnn, fit_linreg, fit_svr, LinearModel, Network, SvrModel, SvrParams,
};
use crate::dataset::{SampleSet, SensorId};
use crate::error::{Error, Result};
use crate::forest::{self, Forest};

/// The four regression families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    /// Random forest.
    Rf,
    /// Backpropagation network.
    Bpnn,
    /// Epsilon support vector regression.
    Svr,
    /// Multiple linear regression.
    Reg,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Rf,
        ModelFamily::Bpnn,
        ModelFamily::Svr,
        ModelFamily::Reg,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ModelFamily::Rf => "rf",
            ModelFamily::Bpnn => "bpnn",
            ModelFamily::Svr => "svr",
            ModelFamily::Reg => "reg",
        }
    }

    pub fn from_code(code: &str) -> Result<ModelFamily> {
        ModelFamily::ALL
            .iter()
            .copied()
            .find(|f| f.code() == code)
            .ok_or_else(|| Error::arg(format!("unknown model family {code:?}")))
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// Hyperparameters for all families; unset fields fall back to defaults (or,
/// for the network, to the per-state presets).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitParams {
    pub trees: usize,
    /// Features per split; `None` selects `max(1, round(M/3))`.
    pub m_try: Option<usize>,
    pub bpnn_hidden: Option<usize>,
    pub bpnn_iterations: Option<usize>,
    pub svr: SvrParams,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            trees: forest::DEFAULT_TREES,
            m_try: None,
            bpnn_hidden: None,
            bpnn_iterations: None,
            svr: SvrParams::default(),
        }
    }
}

/// A fitted regressor of any family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainedModel {
    Rf(Forest),
    Bpnn(Network),
    Svr(SvrModel),
    Reg(LinearModel),
}

impl TrainedModel {
    /// Fits the requested family on the sensor-restricted training set.
    ///
    /// The sensor list selects a feature SET: columns are laid out in
    /// ascending sensor index regardless of the order given, so two orderings
    /// covering the same sensors produce identical models under the same
    /// seed.
    pub fn fit(
        family: ModelFamily,
        train: &SampleSet,
        sensors: &[SensorId],
        params: &FitParams,
        seed: u64,
    ) -> Result<TrainedModel> {
        let mut sensors = sensors.to_vec();
        sensors.sort();
        sensors.dedup();
        let sensors = &sensors[..];
        match family {
            ModelFamily::Rf => {
                let m_try = params
                    .m_try
                    .unwrap_or_else(|| forest::default_m_try(sensors.len()));
                Ok(TrainedModel::Rf(Forest::fit(
                    train,
                    sensors,
                    params.trees,
                    m_try,
                    seed,
                )?))
            }
            ModelFamily::Bpnn => {
                let (preset_hidden, preset_iterations) = bpnn_preset(train.state);
                let hidden = params.bpnn_hidden.unwrap_or(preset_hidden);
                let iterations = params.bpnn_iterations.unwrap_or(preset_iterations);
                Ok(TrainedModel::Bpnn(fit_bpnn(
                    train, sensors, hidden, iterations, seed,
                )?))
            }
            ModelFamily::Svr => Ok(TrainedModel::Svr(fit_svr(train, sensors, &params.svr)?)),
            ModelFamily::Reg => Ok(TrainedModel::Reg(fit_linreg(train, sensors)?)),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Rf(_) => ModelFamily::Rf,
            TrainedModel::Bpnn(_) => ModelFamily::Bpnn,
            TrainedModel::Svr(_) => ModelFamily::Svr,
            TrainedModel::Reg(_) => ModelFamily::Reg,
        }
    }

    pub fn sensors(&self) -> &[SensorId] {
        match self {
            TrainedModel::Rf(m) => &m.sensors,
            TrainedModel::Bpnn(m) => &m.sensors,
            TrainedModel::Svr(m) => &m.sensors,
            TrainedModel::Reg(m) => &m.sensors,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Rf(m) => m.predict(x),
            TrainedModel::Bpnn(m) => m.predict(x),
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::Reg(m) => m.predict(x),
        }
    }

    /// Predictions for every sample in a set, selecting the model's sensor
    /// columns.
    pub fn predict_set(&self, set: &SampleSet) -> Result<Vec<f64>> {
        set.feature_rows(self.sensors())
            .iter()
            .map(|row| self.predict(row))
            .collect()
    }
}
