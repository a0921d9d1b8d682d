//! Sensor sensitivity criteria, sensor ordering, and the redundancy sweep.
//!
//! For each sensor the per-parameter mean responses are differenced along the
//! grid; the mean absolute step is the raw criterion, and dividing each step
//! by the sensor's response range before averaging gives the normalized
//! criterion. Sorting sensors by either criterion and growing the feature set
//! along that order locates the smallest sensor count whose accuracy sits on
//! the plateau.

use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, SensorId, SENSOR_COUNT};
use crate::error::{Error, Result};
use crate::evaluate::{mae, r_squared};
use crate::model::{FitParams, ModelFamily, TrainedModel};
use crate::rng::{self, domain};

/// Which criterion ordered the sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Normalized mean step.
    C1,
    /// Raw mean step.
    C2,
}

impl Criterion {
    pub fn code(self) -> &'static str {
        match self {
            Criterion::C1 => "c1",
            Criterion::C2 => "c2",
        }
    }

    pub fn from_code(code: &str) -> Result<Criterion> {
        match code {
            "c1" => Ok(Criterion::C1),
            "c2" => Ok(Criterion::C2),
            _ => Err(Error::arg(format!("unknown criterion {code:?}"))),
        }
    }
}

/// Mean response per (parameter value, sensor): `p` rows by nine columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerParameterMeans {
    pub means: Vec<[f64; SENSOR_COUNT]>,
}

/// Per-parameter channel means over all samples labeled with each grid value.
pub fn per_parameter_means(set: &SampleSet) -> Result<PerParameterMeans> {
    let groups = set.parameter_groups()?;
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(Error::Completeness(format!(
            "no samples for parameter {} ({})",
            i + 1,
            set.state.grid()[i]
        )));
    }
    let means = groups
        .iter()
        .map(|group| {
            std::array::from_fn(|k| {
                group
                    .iter()
                    .map(|&j| set.samples[j].features[k])
                    .sum::<f64>()
                    / group.len() as f64
            })
        })
        .collect();
    Ok(PerParameterMeans { means })
}

/// Criteria values together with intermediates and both orderings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Normalized criterion per sensor.
    pub c1: [f64; SENSOR_COUNT],
    /// Raw criterion per sensor.
    pub c2: [f64; SENSOR_COUNT],
    pub order_c1: [SensorId; SENSOR_COUNT],
    pub order_c2: [SensorId; SENSOR_COUNT],
    /// `abs_steps[i][k]`: absolute mean-response step i for sensor k.
    pub abs_steps: Vec<[f64; SENSOR_COUNT]>,
    /// Response range (max minus min of the per-parameter means) per sensor.
    pub range: [f64; SENSOR_COUNT],
    /// `normalized_steps[i][k]`: step divided by the sensor's range.
    pub normalized_steps: Vec<[f64; SENSOR_COUNT]>,
    /// Which criterion the caller asked to rank by.
    pub chosen: Criterion,
}

impl SensitivityReport {
    pub fn ordering(&self, criterion: Criterion) -> &[SensorId; SENSOR_COUNT] {
        match criterion {
            Criterion::C1 => &self.order_c1,
            Criterion::C2 => &self.order_c2,
        }
    }

    pub fn values(&self, criterion: Criterion) -> &[f64; SENSOR_COUNT] {
        match criterion {
            Criterion::C1 => &self.c1,
            Criterion::C2 => &self.c2,
        }
    }
}

/// Computes both criteria from the per-parameter means.
///
/// Per sensor: absolute steps between consecutive per-parameter means, the
/// range over those means, each step divided by the range (0 when the range
/// is 0), and the two averages over the `p - 1` steps.
pub fn criteria(means: &PerParameterMeans, chosen: Criterion) -> Result<SensitivityReport> {
    let p = means.means.len();
    if p < 2 {
        return Err(Error::arg(format!(
            "need at least two parameter values, got {p}"
        )));
    }

    let mut abs_steps = vec![[0.0; SENSOR_COUNT]; p - 1];
    let mut range = [0.0; SENSOR_COUNT];
    let mut c1 = [0.0; SENSOR_COUNT];
    let mut c2 = [0.0; SENSOR_COUNT];
    for k in 0..SENSOR_COUNT {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &means.means {
            lo = lo.min(row[k]);
            hi = hi.max(row[k]);
        }
        for (step, pair) in abs_steps.iter_mut().zip(means.means.windows(2)) {
            step[k] = (pair[1][k] - pair[0][k]).abs();
        }
        range[k] = hi - lo;
        let sum: f64 = abs_steps.iter().map(|row| row[k]).sum();
        c2[k] = sum / (p - 1) as f64;
        c1[k] = if range[k] > 0.0 {
            c2[k] / range[k]
        } else {
            0.0
        };
    }
    let normalized_steps = abs_steps
        .iter()
        .map(|row| {
            std::array::from_fn(|k| {
                if range[k] > 0.0 {
                    row[k] / range[k]
                } else {
                    0.0
                }
            })
        })
        .collect();

    Ok(SensitivityReport {
        order_c1: sort_sensors(&c1)?,
        order_c2: sort_sensors(&c2)?,
        c1,
        c2,
        abs_steps,
        range,
        normalized_steps,
        chosen,
    })
}

/// Sensitivity report straight from a sample set.
pub fn analyze(set: &SampleSet, chosen: Criterion) -> Result<SensitivityReport> {
    criteria(&per_parameter_means(set)?, chosen)
}

/// Sensors ordered by descending criterion value; ties break toward the lower
/// sensor index.
pub fn sort_sensors(values: &[f64; SENSOR_COUNT]) -> Result<[SensorId; SENSOR_COUNT]> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::arg(format!("criterion value {v} is not finite")));
    }
    let mut ids = SensorId::all();
    ids.sort_by(|a, b| {
        values[b.index()]
            .partial_cmp(&values[a.index()])
            .expect("finite values")
            .then(a.index().cmp(&b.index()))
    });
    Ok(ids)
}

/// Relative R^2 tolerance for declaring the accuracy plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.02;

/// Accuracy versus sensor count along an ordering prefix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RedundancyCurve {
    pub family: ModelFamily,
    /// Sensor ordering whose prefixes were evaluated.
    pub ordering: [SensorId; SENSOR_COUNT],
    /// Training-set mean absolute error at M = 1..=9 sensors.
    pub mae: [f64; SENSOR_COUNT],
    /// Training-set R^2 at M = 1..=9 sensors.
    pub r2: [f64; SENSOR_COUNT],
    /// Smallest sensor count on the R^2 plateau.
    pub m_r: usize,
    /// Relative tolerance used for the plateau cut.
    pub tolerance: f64,
}

/// Smallest M whose R^2 reaches `(1 - tolerance) * max R^2`; falls back to
/// the argmax when the curve never goes positive.
fn plateau_cut(r2: &[f64; SENSOR_COUNT], tolerance: f64) -> usize {
    let best = r2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best <= 0.0 {
        return r2
            .iter()
            .position(|&v| v == best)
            .map(|i| i + 1)
            .unwrap_or(SENSOR_COUNT);
    }
    let cut = (1.0 - tolerance) * best;
    r2.iter()
        .position(|&v| v >= cut)
        .map(|i| i + 1)
        .expect("the maximum itself passes the cut")
}

/// Trains the chosen family on each ordering prefix M = 1..=9 and records the
/// training-set accuracy per M, then cuts the curve at the plateau.
///
/// Per-prefix seeds derive from (seed, M), so prefixes may be evaluated in
/// any order or concurrently without changing results.
pub fn m_sweep(
    set: &SampleSet,
    ordering: &[SensorId; SENSOR_COUNT],
    family: ModelFamily,
    params: &FitParams,
    seed: u64,
) -> Result<RedundancyCurve> {
    let mut covered = [false; SENSOR_COUNT];
    for id in ordering {
        covered[id.index()] = true;
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::arg("ordering must cover all nine sensors".to_owned()));
    }

    let labels = set.labels();
    let mut curve_mae = [0.0; SENSOR_COUNT];
    let mut curve_r2 = [0.0; SENSOR_COUNT];
    for m in 1..=SENSOR_COUNT {
        let sensors = &ordering[..m];
        let cell_seed = rng::mix(seed, &[domain::SWEEP, m as u64]);
        let model = TrainedModel::fit(family, set, sensors, params, cell_seed)?;
        let preds = model.predict_set(set)?;
        curve_mae[m - 1] = mae(&preds, &labels)?;
        curve_r2[m - 1] = r_squared(&preds, &labels)?;
    }

    Ok(RedundancyCurve {
        family,
        ordering: *ordering,
        mae: curve_mae,
        r2: curve_r2,
        m_r: plateau_cut(&curve_r2, PLATEAU_TOLERANCE),
        tolerance: PLATEAU_TOLERANCE,
    })
}

impl RedundancyCurve {
    /// CSV rendering: `M,r2,mae`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,r2,mae\n");
        for m in 1..=SENSOR_COUNT {
            out.push_str(&format!("{m},{},{}\n", self.r2[m - 1], self.mae[m - 1]));
        }
        out
    }
}
