//! Random-forest regression with out-of-bag tracking.
//!
//! Each tree trains on its own bootstrap of the sample set; the samples a tree
//! never drew form its validation (out-of-bag) set and drive both the
//! ensemble-size convergence curve and permutation importance. Tree training
//! runs in parallel; per-tree generators are derived from (seed, tree index),
//! so the result is identical for any worker count.

mod importance;
mod tree;

pub use importance::{oob_mse_curve, permutation_importance, ImportanceReport};
pub use tree::{predict_tree, GrowParams, Node, RegressionTree};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, SensorId};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Default ensemble size; the out-of-bag error has converged well before this.
pub const DEFAULT_TREES: usize = 500;

/// Default minimum node size for regression trees.
pub const DEFAULT_MIN_NODE_SIZE: usize = 5;

/// Features examined per split: `max(1, round(M / 3))`, and 1 whenever fewer
/// than three features are available.
pub fn default_m_try(feature_count: usize) -> usize {
    if feature_count < 3 {
        1
    } else {
        ((feature_count as f64 / 3.0).round() as usize).max(1)
    }
}

/// A fitted random forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    /// Sensors whose channels feed the feature vector, in column order.
    pub sensors: Vec<SensorId>,
    pub trees: Vec<RegressionTree>,
    pub m_try: usize,
    pub min_node_size: usize,
    pub seed: u64,
}

impl Forest {
    /// Trains `n_trees` trees on bootstraps of `train`, restricted to the
    /// given sensor columns.
    pub fn fit(
        train: &SampleSet,
        sensors: &[SensorId],
        n_trees: usize,
        m_try: usize,
        seed: u64,
    ) -> Result<Forest> {
        let n = train.len();
        if n == 0 {
            return Err(Error::arg("training set is empty".to_owned()));
        }
        if sensors.is_empty() {
            return Err(Error::arg("at least one sensor is required".to_owned()));
        }
        if n_trees == 0 {
            return Err(Error::arg("n_trees must be positive".to_owned()));
        }
        if m_try == 0 || m_try > sensors.len() {
            return Err(Error::arg(format!(
                "m_try {m_try} outside 1..={}",
                sensors.len()
            )));
        }

        let rows = train.feature_rows(sensors);
        let labels = train.labels();
        let params = GrowParams {
            m_try,
            min_node_size: DEFAULT_MIN_NODE_SIZE,
        };

        let trees: Vec<RegressionTree> = (0..n_trees)
            .into_par_iter()
            .map(|i| {
                let mut tree_rng = rng::stream(seed, &[domain::TREE, i as u64]);
                let bootstrap = rng::bootstrap_indices(&mut tree_rng, n);
                let mut drawn = vec![false; n];
                for &j in &bootstrap {
                    drawn[j] = true;
                }
                let oob: Vec<usize> = (0..n).filter(|&j| !drawn[j]).collect();
                let nodes = tree::grow_tree(&rows, &labels, bootstrap.clone(), &params, &mut tree_rng);
                RegressionTree {
                    nodes,
                    bootstrap,
                    oob,
                }
            })
            .collect();

        Ok(Forest {
            sensors: sensors.to_vec(),
            trees,
            m_try,
            min_node_size: DEFAULT_MIN_NODE_SIZE,
            seed,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.sensors.len()
    }

    /// Ensemble prediction: the mean of the tree outputs.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count() {
            return Err(Error::arg(format!(
                "expected {} features, got {}",
                self.feature_count(),
                x.len()
            )));
        }
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| tree::predict_tree(&t.nodes, x))
            .sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Predictions for a whole sample set (its sensor columns are selected
    /// according to the forest's training layout).
    pub fn predict_set(&self, set: &SampleSet) -> Result<Vec<f64>> {
        let rows = set.feature_rows(&self.sensors);
        rows.par_iter()
            .map(|row| self.predict(row))
            .collect::<Result<Vec<f64>>>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Sample, StateKind, SENSOR_COUNT};

    fn linear_set(n: usize) -> SampleSet {
        // Labels on the roll grid; feature 0 is the label, others are zero.
        let grid = StateKind::Roll.grid();
        let samples: Vec<Sample> = (0..n)
            .map(|j| {
                let label = grid[j % grid.len()];
                let mut features = [0.0; SENSOR_COUNT];
                features[0] = label;
                Sample { features, label }
            })
            .collect();
        SampleSet::new(StateKind::Roll, Provenance::Synthetic, samples)
    }

    #[test]
    fn constant_labels_predict_the_constant() {
        let mut set = linear_set(50);
        for s in &mut set.samples {
            s.label = 5.0;
        }
        // Labels now off-grid is fine for fitting; only grouping needs the grid.
        let forest = Forest::fit(&set, &SensorId::all(), 20, 3, 1).unwrap();
        let y = forest.predict(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, 5.0);
    }

    #[test]
    fn single_sample_forest_predicts_its_label() {
        let set = SampleSet::new(
            StateKind::Roll,
            Provenance::Synthetic,
            vec![Sample {
                features: [1.0; SENSOR_COUNT],
                label: 7.0,
            }],
        );
        let forest = Forest::fit(&set, &SensorId::all(), 10, 3, 1).unwrap();
        for tree in &forest.trees {
            assert_eq!(tree.nodes.len(), 1);
            assert_eq!(tree.nodes[0].value, 7.0);
        }
        assert_eq!(forest.predict(&[0.0; SENSOR_COUNT]).unwrap(), 7.0);
    }

    #[test]
    fn predictions_average_tree_outputs() {
        let set = linear_set(60);
        let mut forest = Forest::fit(&set, &[SensorId::all()[0]], 2, 1, 3).unwrap();
        forest.trees[0].nodes = vec![Node {
            feature: -1,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: 1.0,
        }];
        forest.trees[1].nodes = vec![Node {
            feature: -1,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: 3.0,
        }];
        assert_eq!(forest.predict(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn prediction_stays_within_label_range() {
        let set = linear_set(200);
        let forest = Forest::fit(&set, &SensorId::all(), 30, 3, 9).unwrap();
        let (lo, hi) = (-50.0, 50.0);
        for x in [-500.0, -3.0, 0.0, 17.0, 400.0] {
            let mut row = [0.0; SENSOR_COUNT];
            row[0] = x;
            let y = forest.predict(&row).unwrap();
            assert!((lo..=hi).contains(&y), "{y}");
        }
    }

    #[test]
    fn noise_free_linear_data_fits_tightly() {
        let set = linear_set(800);
        let forest = Forest::fit(&set, &SensorId::all(), 100, 3, 5).unwrap();
        let preds = forest.predict_set(&set).unwrap();
        let labels = set.labels();
        let mean = labels.iter().sum::<f64>() / labels.len() as f64;
        let sse: f64 = preds
            .iter()
            .zip(&labels)
            .map(|(p, y)| (p - y) * (p - y))
            .sum();
        let sst: f64 = labels.iter().map(|y| (y - mean) * (y - mean)).sum();
        assert!(1.0 - sse / sst > 0.99);
    }

    #[test]
    fn oob_fraction_is_plausible() {
        let set = linear_set(600);
        let forest = Forest::fit(&set, &SensorId::all(), 25, 3, 11).unwrap();
        for tree in &forest.trees {
            let frac = tree.oob.len() as f64 / 600.0;
            assert!((0.25..=0.50).contains(&frac), "oob fraction {frac}");
        }
    }

    #[test]
    fn fit_is_deterministic_across_worker_counts() {
        let set = linear_set(150);
        let fit_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| Forest::fit(&set, &SensorId::all(), 40, 3, 7).unwrap())
        };
        let a = fit_with(1);
        let b = fit_with(8);
        assert_eq!(a, b);
    }

    #[test]
    fn argument_errors() {
        let set = linear_set(10);
        assert!(Forest::fit(&set, &SensorId::all(), 10, 10, 1).is_err());
        assert!(Forest::fit(&set, &[], 10, 1, 1).is_err());
        let empty = SampleSet::new(StateKind::Roll, Provenance::Synthetic, vec![]);
        assert!(Forest::fit(&empty, &SensorId::all(), 10, 3, 1).is_err());
        let forest = Forest::fit(&set, &SensorId::all(), 5, 3, 1).unwrap();
        assert!(forest.predict(&[0.0; 3]).is_err());
    }

    #[test]
    fn m_try_default_follows_the_rule() {
        assert_eq!(default_m_try(9), 3);
        assert_eq!(default_m_try(4), 1);
        assert_eq!(default_m_try(2), 1);
        assert_eq!(default_m_try(1), 1);
        assert_eq!(default_m_try(6), 2);
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let set = linear_set(80);
        let forest = Forest::fit(&set, &SensorId::all(), 10, 3, 13).unwrap();
        let json = serde_json::to_string(&forest).unwrap();
        let back: Forest = serde_json::from_str(&json).unwrap();
        assert_eq!(forest, back);
        let mut row = [0.0; SENSOR_COUNT];
        row[0] = 12.34;
        assert_eq!(
            forest.predict(&row).unwrap().to_bits(),
            back.predict(&row).unwrap().to_bits()
        );
    }
}
