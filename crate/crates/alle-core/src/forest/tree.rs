//! CART regression trees grown on bootstrap samples.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

/// Flattened tree node. Internal nodes route on `feature <= threshold`;
/// leaves carry the mean label of their training samples in `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Split feature index, or -1 for a leaf.
    pub feature: i32,
    pub threshold: f64,
    /// Child offsets into the node array (0 for leaves).
    pub left: u32,
    pub right: u32,
    /// Mean label of the samples reaching this node.
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Node {
        Node {
            feature: -1,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature < 0
    }
}

/// One regression tree with its bootstrap bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    /// Training-set indices drawn (with replacement) into this tree's bootstrap.
    pub bootstrap: Vec<usize>,
    /// Training-set indices never drawn: this tree's validation samples.
    pub oob: Vec<usize>,
}

pub struct GrowParams {
    /// Features examined per node (constant-valued candidates do not count).
    pub m_try: usize,
    /// Nodes smaller than this become leaves.
    pub min_node_size: usize,
}

struct BestSplit {
    cost: f64,
    feature: usize,
    threshold: f64,
}

/// Best threshold for one feature by summed child squared error, using prefix
/// sums over the value-sorted node samples. Returns `None` when the feature is
/// constant within the node.
fn best_split_for_feature(
    rows: &[Vec<f64>],
    labels: &[f64],
    node_indices: &[usize],
    feature: usize,
    scratch: &mut Vec<(f64, f64)>,
) -> Option<(f64, f64)> {
    scratch.clear();
    scratch.extend(
        node_indices
            .iter()
            .map(|&j| (rows[j][feature], labels[j])),
    );
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len();
    if scratch[0].0 == scratch[n - 1].0 {
        return None;
    }

    let total_sum: f64 = scratch.iter().map(|&(_, y)| y).sum();
    let total_sq: f64 = scratch.iter().map(|&(_, y)| y * y).sum();

    let mut best: Option<(f64, f64)> = None;
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    for i in 0..n - 1 {
        let (x, y) = scratch[i];
        left_sum += y;
        left_sq += y * y;
        if x == scratch[i + 1].0 {
            continue;
        }
        let left_n = (i + 1) as f64;
        let right_n = (n - i - 1) as f64;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let cost = (left_sq - left_sum * left_sum / left_n)
            + (right_sq - right_sum * right_sum / right_n);
        let threshold = x / 2.0 + scratch[i + 1].0 / 2.0;
        let better = match best {
            None => true,
            // Strictly-lower cost wins; equal cost keeps the lower threshold.
            Some((c, t)) => cost < c || (cost == c && threshold < t),
        };
        if better {
            best = Some((cost, threshold));
        }
    }
    best
}

/// Grows a tree over `indices` (bootstrap positions into `rows`/`labels`).
///
/// At each node candidate features are visited in a freshly shuffled order
/// until `m_try` non-constant candidates have been examined; the best split by
/// (cost, feature index, threshold) wins. Nodes become leaves when they are
/// smaller than `min_node_size`, their labels are pure, or no candidate
/// feature varies.
pub fn grow_tree(
    rows: &[Vec<f64>],
    labels: &[f64],
    indices: Vec<usize>,
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Node> {
    let feature_count = rows.first().map_or(0, Vec::len);
    let mut nodes: Vec<Node> = Vec::new();
    // Work items: (node slot, samples at that node).
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut feature_order: Vec<usize> = (0..feature_count).collect();
    let mut scratch: Vec<(f64, f64)> = Vec::new();

    nodes.push(Node::leaf(0.0));
    stack.push((0, indices));

    while let Some((slot, node_indices)) = stack.pop() {
        let n = node_indices.len();
        let mean = node_indices.iter().map(|&j| labels[j]).sum::<f64>() / n as f64;
        nodes[slot].value = mean;

        let pure = node_indices
            .iter()
            .all(|&j| labels[j] == labels[node_indices[0]]);
        if n < params.min_node_size || pure {
            continue;
        }

        rng::shuffle(rng, &mut feature_order);
        let mut examined = 0;
        let mut best: Option<BestSplit> = None;
        for &feature in &feature_order {
            if examined == params.m_try {
                break;
            }
            let Some((cost, threshold)) =
                best_split_for_feature(rows, labels, &node_indices, feature, &mut scratch)
            else {
                continue; // constant within the node; draw another candidate
            };
            examined += 1;
            let better = match &best {
                None => true,
                Some(b) => {
                    cost < b.cost
                        || (cost == b.cost
                            && (feature < b.feature
                                || (feature == b.feature && threshold < b.threshold)))
                }
            };
            if better {
                best = Some(BestSplit {
                    cost,
                    feature,
                    threshold,
                });
            }
        }

        let Some(split) = best else {
            continue; // every candidate was constant
        };

        let (left_set, right_set): (Vec<usize>, Vec<usize>) = node_indices
            .into_iter()
            .partition(|&j| rows[j][split.feature] <= split.threshold);
        debug_assert!(!left_set.is_empty() && !right_set.is_empty());

        let left_slot = nodes.len();
        nodes.push(Node::leaf(0.0));
        let right_slot = nodes.len();
        nodes.push(Node::leaf(0.0));
        nodes[slot].feature = split.feature as i32;
        nodes[slot].threshold = split.threshold;
        nodes[slot].left = left_slot as u32;
        nodes[slot].right = right_slot as u32;

        // Push right first so the left branch is processed next (depth-first,
        // left-to-right), keeping growth order deterministic.
        stack.push((right_slot, right_set));
        stack.push((left_slot, left_set));
    }

    nodes
}

/// Evaluates a tree on one feature row.
pub fn predict_tree(nodes: &[Node], x: &[f64]) -> f64 {
    let mut at = &nodes[0];
    while !at.is_leaf() {
        at = if x[at.feature as usize] <= at.threshold {
            &nodes[at.left as usize]
        } else {
            &nodes[at.right as usize]
        };
    }
    at.value
}
