//! Accuracy metrics, the train/test estimation protocol, and the
//! family-by-ordering comparison grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split, SampleSet, SensorId, StateKind, SENSOR_COUNT};
use crate::error::{Error, Result};
use crate::model::{FitParams, ModelFamily, TrainedModel};
use crate::rng::{self, domain};
use crate::sensitivity::Criterion;

/// Mean absolute error.
pub fn mae(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::arg("mae of an empty sequence".to_owned()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

/// Coefficient of determination, one minus the residual sum over the total
/// sum of squares.
pub fn r_squared(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.len() < 2 {
        return Err(Error::arg("need at least two samples".to_owned()));
    }
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    let sst: f64 = labels.iter().map(|y| (y - mean) * (y - mean)).sum();
    if sst == 0.0 {
        return Err(Error::UndefinedVariance);
    }
    let sse: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(1.0 - sse / sst)
}

/// Error of one parameter value's test samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerParameterMae {
    pub parameter: f64,
    pub count: usize,
    pub mae: f64,
}

/// Accuracy of one fitted model, on held-out data and on its training set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: ModelFamily,
    pub state: StateKind,
    /// Sensors used, in feature-column order.
    pub sensors: Vec<SensorId>,
    pub m_used: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Held-out metrics.
    pub test_mae: f64,
    pub test_r2: f64,
    /// Same-model metrics on its own training set; the two are reported
    /// side by side and must not be conflated.
    pub train_mae: f64,
    pub train_r2: f64,
    /// Held-out error per parameter value.
    pub per_parameter_mae: Vec<PerParameterMae>,
    pub seed: u64,
}

/// Fits one family on the training set (restricted to a sensor prefix) and
/// evaluates it on held-out data.
pub fn estimate(
    train: &SampleSet,
    test: &SampleSet,
    family: ModelFamily,
    sensors: &[SensorId],
    params: &FitParams,
    seed: u64,
) -> Result<EvalReport> {
    if train.state != test.state {
        return Err(Error::StateMismatch {
            expected: train.state.code().to_owned(),
            found: test.state.code().to_owned(),
        });
    }
    let model = TrainedModel::fit(family, train, sensors, params, seed)?;
    // The model canonicalizes its column layout; report the same set.
    let sensors = model.sensors();

    let train_preds = model.predict_set(train)?;
    let train_labels = train.labels();
    let test_preds = model.predict_set(test)?;
    let test_labels = test.labels();

    // Held-out error per parameter value, in grid order.
    let groups = test.parameter_groups()?;
    let mut per_parameter_mae = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let preds: Vec<f64> = group.iter().map(|&j| test_preds[j]).collect();
        let labels: Vec<f64> = group.iter().map(|&j| test_labels[j]).collect();
        per_parameter_mae.push(PerParameterMae {
            parameter: test.state.grid()[i],
            count: group.len(),
            mae: mae(&preds, &labels)?,
        });
    }

    Ok(EvalReport {
        family,
        state: train.state,
        sensors: sensors.to_vec(),
        m_used: sensors.len(),
        n_train: train.len(),
        n_test: test.len(),
        test_mae: mae(&test_preds, &test_labels)?,
        test_r2: r_squared(&test_preds, &test_labels)?,
        train_mae: mae(&train_preds, &train_labels)?,
        train_r2: r_squared(&train_preds, &train_labels)?,
        per_parameter_mae,
        seed,
    })
}

/// One comparison-grid cell; failures are recorded without aborting the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub family: ModelFamily,
    pub ordering: Criterion,
    pub m: usize,
    pub seed: u64,
    pub report: Option<EvalReport>,
    pub failure: Option<String>,
}

/// The best (R^2, MAE, M) a family reached, with the ordering that won.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestTuple {
    pub family: ModelFamily,
    pub ordering: Criterion,
    pub m: usize,
    pub r2: f64,
    pub mae: f64,
}

impl BestTuple {
    /// Text form `(R^2, MAE unit, M)` with four decimals.
    pub fn render(&self, state: StateKind) -> String {
        format!(
            "({:.3}, {:.3} {}, {})",
            self.r2,
            self.mae,
            state.unit().label(),
            self.m
        )
    }
}

/// Full (family x ordering x M) grid of held-out evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub state: StateKind,
    pub train_fraction: f64,
    pub seed: u64,
    pub cells: Vec<ComparisonCell>,
    pub best: Vec<BestTuple>,
}

/// Relative R^2 tolerance when picking each family's plateau point.
const BEST_TUPLE_TOLERANCE: f64 = 0.02;

/// Evaluates every (family, ordering, sensor count) cell on its own seeded
/// 80/20-style split and extracts the best tuple per family.
///
/// Cell seeds derive from (seed, family, ordering, M); cells are independent
/// and the grid result does not depend on evaluation order.
pub fn compare_families(
    set: &SampleSet,
    order_c1: &[SensorId; SENSOR_COUNT],
    order_c2: &[SensorId; SENSOR_COUNT],
    params: &FitParams,
    train_fraction: f64,
    seed: u64,
) -> Result<ComparisonMatrix> {
    let coordinates: Vec<(ModelFamily, Criterion, usize)> = ModelFamily::ALL
        .iter()
        .flat_map(|&family| {
            [Criterion::C1, Criterion::C2]
                .into_iter()
                .flat_map(move |ordering| {
                    (1..=SENSOR_COUNT).map(move |m| (family, ordering, m))
                })
        })
        .collect();

    let cells: Vec<ComparisonCell> = coordinates
        .par_iter()
        .map(|&(family, ordering, m)| {
            let family_idx = ModelFamily::ALL.iter().position(|&f| f == family).unwrap();
            let ordering_idx = match ordering {
                Criterion::C1 => 0u64,
                Criterion::C2 => 1u64,
            };
            let cell_seed = rng::mix(
                seed,
                &[domain::CELL, family_idx as u64, ordering_idx, m as u64],
            );
            let order = match ordering {
                Criterion::C1 => order_c1,
                Criterion::C2 => order_c2,
            };
            let outcome = split(set, train_fraction, cell_seed).and_then(|(train, test)| {
                estimate(&train, &test, family, &order[..m], params, cell_seed)
            });
            match outcome {
                Ok(report) => ComparisonCell {
                    family,
                    ordering,
                    m,
                    seed: cell_seed,
                    report: Some(report),
                    failure: None,
                },
                Err(e) => ComparisonCell {
                    family,
                    ordering,
                    m,
                    seed: cell_seed,
                    report: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best = ModelFamily::ALL
        .iter()
        .filter_map(|&family| best_tuple_for(&cells, family))
        .collect();

    Ok(ComparisonMatrix {
        state: set.state,
        train_fraction,
        seed,
        cells,
        best,
    })
}

/// Plateau point of one family: per ordering, the smallest M whose held-out
/// R^2 is within tolerance of that ordering's maximum; the better ordering
/// (higher R^2 at its plateau point, ties to the raw criterion) represents
/// the family.
fn best_tuple_for(cells: &[ComparisonCell], family: ModelFamily) -> Option<BestTuple> {
    let mut candidates = Vec::new();
    for ordering in [Criterion::C1, Criterion::C2] {
        let mut curve: Vec<&EvalReport> = cells
            .iter()
            .filter(|c| c.family == family && c.ordering == ordering)
            .filter_map(|c| c.report.as_ref())
            .collect();
        curve.sort_by_key(|r| r.m_used);
        if curve.is_empty() {
            continue;
        }
        let best_r2 = curve
            .iter()
            .map(|r| r.test_r2)
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = if best_r2 > 0.0 {
            (1.0 - BEST_TUPLE_TOLERANCE) * best_r2
        } else {
            best_r2
        };
        let at = curve.iter().find(|r| r.test_r2 >= cut)?;
        candidates.push(BestTuple {
            family,
            ordering,
            m: at.m_used,
            r2: at.test_r2,
            mae: at.test_mae,
        });
    }
    candidates
        .into_iter()
        .max_by(|a, b| {
            a.r2.partial_cmp(&b.r2)
                .expect("finite r2")
                .then_with(|| match (a.ordering, b.ordering) {
                    (Criterion::C2, Criterion::C1) => std::cmp::Ordering::Greater,
                    (Criterion::C1, Criterion::C2) => std::cmp::Ordering::Less,
                    _ => std::cmp::Ordering::Equal,
                })
        })
}

impl ComparisonMatrix {
    /// Flat CSV: `family,ordering,M,r2,mae,train_r2,train_mae,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,ordering,M,r2,mae,train_r2,train_mae,seed\n");
        for cell in &self.cells {
            match &cell.report {
                Some(r) => out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    cell.family,
                    cell.ordering.code(),
                    cell.m,
                    r.test_r2,
                    r.test_mae,
                    r.train_r2,
                    r.train_mae,
                    cell.seed
                )),
                None => out.push_str(&format!(
                    "{},{},{},failed,failed,failed,failed,{}\n",
                    cell.family,
                    cell.ordering.code(),
                    cell.m,
                    cell.seed
                )),
            }
        }
        out
    }
}
