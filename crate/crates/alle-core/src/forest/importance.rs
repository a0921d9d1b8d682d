//! Out-of-bag error tracking and permutation importance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, SensorId};
use crate::error::{Error, Result};
use crate::forest::{predict_tree, Forest};
use crate::rng::{self, domain};

/// Per-feature permutation-importance values.
///
/// `delta_mse` follows the baseline-minus-permuted convention, so informative
/// features come out negative (permuting them raises the error); rank by the
/// magnitude of `importance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub sensors: Vec<SensorId>,
    /// Normalized importance per feature: mean delta over its standard error.
    pub importance: Vec<f64>,
    /// Mean of the per-tree MSE differences per feature.
    pub mean_delta_mse: Vec<f64>,
    /// Population standard error of the per-tree differences per feature.
    pub standard_error: Vec<f64>,
    pub n_trees: usize,
    /// Sensors ordered by decreasing importance magnitude.
    pub ranking: Vec<SensorId>,
}

fn mse(preds: &[f64], labels: &[f64]) -> f64 {
    let n = preds.len() as f64;
    preds
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / n
}

/// Out-of-bag mean squared residuals for every ensemble prefix 1..=N.
///
/// Entry `i` aggregates, over all training samples that are out-of-bag for at
/// least one of the first `i + 1` trees, the squared difference between the
/// label and the mean prediction of the covering trees. Entries with no
/// covered sample are `None`.
pub fn oob_mse_curve(forest: &Forest, train: &SampleSet) -> Result<Vec<Option<f64>>> {
    let n = train.len();
    let rows = train.feature_rows(&forest.sensors);
    let labels = train.labels();

    // Per-tree out-of-bag predictions, computed independently.
    let per_tree: Vec<Vec<(usize, f64)>> = forest
        .trees
        .par_iter()
        .map(|tree| {
            tree.oob
                .iter()
                .map(|&j| (j, predict_tree(&tree.nodes, &rows[j])))
                .collect()
        })
        .collect();

    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    let mut curve = Vec::with_capacity(forest.trees.len());
    for preds in &per_tree {
        for &(j, p) in preds {
            sum[j] += p;
            count[j] += 1;
        }
        let mut sse = 0.0;
        let mut covered = 0usize;
        for j in 0..n {
            if count[j] > 0 {
                let avg = sum[j] / count[j] as f64;
                let r = avg - labels[j];
                sse += r * r;
                covered += 1;
            }
        }
        curve.push((covered > 0).then(|| sse / covered as f64));
    }
    Ok(curve)
}

/// Permutation importance over the forest's out-of-bag sets.
///
/// For each tree the baseline out-of-bag MSE is compared against the MSE after
/// shuffling one feature column within the out-of-bag samples (one fresh
/// permutation per tree/feature pair, drawn from the seeded stream). The
/// per-feature differences are normalized by their standard error; a feature
/// whose permutation changes nothing reports 0.
pub fn permutation_importance(
    forest: &Forest,
    train: &SampleSet,
    seed: u64,
) -> Result<ImportanceReport> {
    let n_trees = forest.trees.len();
    let m = forest.feature_count();
    if let Some(i) = forest.trees.iter().position(|t| t.oob.is_empty()) {
        return Err(Error::DegenerateBootstrap { tree: i });
    }
    let rows = train.feature_rows(&forest.sensors);
    let labels = train.labels();

    // deltas[k][i]: baseline minus permuted MSE for feature k on tree i.
    let per_tree: Vec<Vec<f64>> = forest
        .trees
        .par_iter()
        .enumerate()
        .map(|(i, tree)| {
            let oob_rows: Vec<&[f64]> = tree.oob.iter().map(|&j| rows[j].as_slice()).collect();
            let oob_labels: Vec<f64> = tree.oob.iter().map(|&j| labels[j]).collect();
            let baseline_preds: Vec<f64> = oob_rows
                .iter()
                .map(|row| predict_tree(&tree.nodes, row))
                .collect();
            let baseline = mse(&baseline_preds, &oob_labels);

            (0..m)
                .map(|k| {
                    let mut perm: Vec<usize> = (0..oob_rows.len()).collect();
                    let mut prng =
                        rng::stream(seed, &[domain::PERMUTE, i as u64, k as u64]);
                    rng::shuffle(&mut prng, &mut perm);
                    let mut scratch = vec![0.0; m];
                    let preds: Vec<f64> = oob_rows
                        .iter()
                        .enumerate()
                        .map(|(j, row)| {
                            scratch.copy_from_slice(row);
                            scratch[k] = oob_rows[perm[j]][k];
                            predict_tree(&tree.nodes, &scratch)
                        })
                        .collect();
                    baseline - mse(&preds, &oob_labels)
                })
                .collect()
        })
        .collect();

    let mut importance = vec![0.0; m];
    let mut mean_delta = vec![0.0; m];
    let mut std_err = vec![0.0; m];
    for k in 0..m {
        let deltas: Vec<f64> = per_tree.iter().map(|t| t[k]).collect();
        let mean = deltas.iter().sum::<f64>() / n_trees as f64;
        let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n_trees as f64;
        let se = var.sqrt();
        mean_delta[k] = mean;
        std_err[k] = se;
        importance[k] = if se > 0.0 { mean / se } else { 0.0 };
    }

    let mut ranking = forest.sensors.clone();
    ranking.sort_by(|a, b| {
        let ka = forest.sensors.iter().position(|s| s == a).unwrap();
        let kb = forest.sensors.iter().position(|s| s == b).unwrap();
        importance[kb]
            .abs()
            .partial_cmp(&importance[ka].abs())
            .expect("finite importance")
            .then(a.index().cmp(&b.index()))
    });

    Ok(ImportanceReport {
        sensors: forest.sensors.clone(),
        importance,
        mean_delta_mse: mean_delta,
        standard_error: std_err,
        n_trees,
        ranking,
    })
}
