//! Regression tree base learner.
//!
//! Trees are grown greedily on pseudo-residuals with exact split search:
//! numeric features scan every cut between distinct values, the categorical
//! aircraft-type feature scans membership sets after ordering categories by
//! mean response. Leaf values are refit to the loss minimizer of the actual
//! residuals (mean for squared loss, the target quantile for pinball loss).
//! Rows with a missing feature value follow the child that received more
//! training rows.

use serde::{Deserialize, Serialize};

use crate::domain::ColumnKind;

use super::{quantile, Loss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Go left when `value <= threshold`.
    Threshold(f64),
    /// Go left when the category index is in the (sorted) set.
    Categories(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        test: SplitTest,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One fitted tree; nodes stored in preorder with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, test, default_left, left, right } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() {
                        *default_left
                    } else {
                        match test {
                            SplitTest::Threshold(t) => v <= *t,
                            SplitTest::Categories(set) => {
                                set.binary_search(&(v as u32)).is_ok()
                            }
                        }
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(super) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub loss: Loss,
}

/// Inputs shared by every node of one tree build.
pub(super) struct TreeData<'a> {
    /// Column-major feature matrix over the full dataset.
    pub columns: &'a [Vec<f64>],
    pub kinds: &'a [ColumnKind],
    /// Pseudo-residuals (split targets), indexed by row.
    pub grad: &'a [f64],
    /// Actual residuals `y - f` (leaf refit targets), indexed by row.
    pub refit: &'a [f64],
}

struct BestSplit {
    feature: usize,
    test: SplitTest,
    gain: f64,
    default_left: bool,
}

const MIN_GAIN: f64 = 1e-10;

/// Grow one tree over `rows` considering only `features`. `gains` accumulates
/// the split gain per feature for importance reporting.
pub(super) fn grow(
    data: &TreeData,
    rows: &[u32],
    features: &[usize],
    params: &TreeParams,
    gains: &mut [f64],
) -> Tree {
    // Pre-sort each candidate feature once; nodes partition these lists as
    // the tree grows instead of re-sorting.
    let sorted: Vec<Vec<u32>> = features
        .iter()
        .map(|&f| {
            let mut idx: Vec<u32> = rows
                .iter()
                .copied()
                .filter(|&r| !data.columns[f][r as usize].is_nan())
                .collect();
            idx.sort_by(|&a, &b| {
                data.columns[f][a as usize]
                    .partial_cmp(&data.columns[f][b as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let mut nodes = Vec::new();
    build(data, rows.to_vec(), sorted, features, params, 0, &mut nodes, gains);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn build(
    data: &TreeData,
    rows: Vec<u32>,
    sorted: Vec<Vec<u32>>,
    features: &[usize],
    params: &TreeParams,
    depth: usize,
    nodes: &mut Vec<Node>,
    gains: &mut [f64],
) -> usize {
    let make_leaf = |nodes: &mut Vec<Node>, rows: &[u32]| {
        let targets: Vec<f64> = rows.iter().map(|&r| data.refit[r as usize]).collect();
        let value = leaf_value(&targets, params.loss);
        nodes.push(Node::Leaf { value });
        nodes.len() - 1
    };

    if depth >= params.max_depth || rows.len() < 2 * params.min_leaf {
        return make_leaf(nodes, &rows);
    }

    let best = find_best_split(data, &rows, &sorted, features, params);
    let Some(best) = best else {
        return make_leaf(nodes, &rows);
    };
    gains[best.feature] += best.gain;

    // Route every node row, then filter the per-feature sorted lists.
    let goes_left = |r: u32| -> bool {
        let v = data.columns[best.feature][r as usize];
        if v.is_nan() {
            best.default_left
        } else {
            match &best.test {
                SplitTest::Threshold(t) => v <= *t,
                SplitTest::Categories(set) => set.binary_search(&(v as u32)).is_ok(),
            }
        }
    };
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
        rows.iter().partition(|&&r| goes_left(r));
    if left_rows.is_empty() || right_rows.is_empty() {
        return make_leaf(nodes, &rows);
    }
    let mut left_sorted = Vec::with_capacity(sorted.len());
    let mut right_sorted = Vec::with_capacity(sorted.len());
    for list in &sorted {
        let (l, r): (Vec<u32>, Vec<u32>) = list.iter().partition(|&&x| goes_left(x));
        left_sorted.push(l);
        right_sorted.push(r);
    }

    let at = nodes.len();
    nodes.push(Node::Leaf { value: 0.0 }); // placeholder, patched below
    let left = build(data, left_rows, left_sorted, features, params, depth + 1, nodes, gains);
    let right = build(data, right_rows, right_sorted, features, params, depth + 1, nodes, gains);
    nodes[at] = Node::Split {
        feature: best.feature,
        test: best.test,
        default_left: best.default_left,
        left,
        right,
    };
    at
}

fn find_best_split(
    data: &TreeData,
    rows: &[u32],
    sorted: &[Vec<u32>],
    features: &[usize],
    params: &TreeParams,
) -> Option<BestSplit> {
    let total_sum: f64 = rows.iter().map(|&r| data.grad[r as usize]).sum();
    let total_n = rows.len() as f64;
    let parent_score = total_sum * total_sum / total_n;

    let mut best: Option<BestSplit> = None;
    for (fi, &feature) in features.iter().enumerate() {
        let candidate = match data.kinds[feature] {
            ColumnKind::Numeric => {
                numeric_split(data, feature, &sorted[fi], rows.len(), total_sum, parent_score, params)
            }
            ColumnKind::Categorical => {
                categorical_split(data, feature, &sorted[fi], total_sum, parent_score, params)
            }
        };
        if let Some(c) = candidate {
            // Strict improvement keeps the first (lowest-index) feature on
            // ties, which makes split search order-independent.
            let replace = match &best {
                None => true,
                Some(b) => c.gain > b.gain + f64::EPSILON * parent_score.abs().max(1.0),
            };
            if replace {
                best = Some(c);
            }
        }
    }
    best.filter(|b| b.gain > MIN_GAIN)
}

fn numeric_split(
    data: &TreeData,
    feature: usize,
    sorted_rows: &[u32],
    node_n: usize,
    total_sum: f64,
    parent_score: f64,
    params: &TreeParams,
) -> Option<BestSplit> {
    let n = sorted_rows.len();
    if n < 2 * params.min_leaf {
        return None;
    }
    let n_missing = node_n - n;
    let col = &data.columns[feature];
    let finite_sum: f64 = sorted_rows.iter().map(|&r| data.grad[r as usize]).sum();
    // Gain is measured on the rows with a present value; missing rows follow
    // the bigger child afterwards.
    let parent_finite = finite_sum * finite_sum / n as f64;
    let _ = (total_sum, parent_score);

    let mut best_gain = 0.0;
    let mut best_threshold = f64::NAN;
    let mut best_left_n = 0usize;
    let mut left_sum = 0.0;
    for (i, &r) in sorted_rows.iter().enumerate().take(n - 1) {
        left_sum += data.grad[r as usize];
        let left_n = i + 1;
        let right_n = n - left_n;
        if left_n < params.min_leaf || right_n < params.min_leaf {
            continue;
        }
        let v = col[r as usize];
        let v_next = col[sorted_rows[i + 1] as usize];
        if v == v_next {
            continue;
        }
        let right_sum = finite_sum - left_sum;
        let score = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
        let gain = score - parent_finite;
        if gain > best_gain {
            best_gain = gain;
            best_threshold = 0.5 * (v + v_next);
            best_left_n = left_n;
        }
    }
    if best_threshold.is_nan() {
        return None;
    }
    Some(BestSplit {
        feature,
        test: SplitTest::Threshold(best_threshold),
        gain: best_gain,
        default_left: best_left_n + n_missing >= n - best_left_n,
    })
}

fn categorical_split(
    data: &TreeData,
    feature: usize,
    sorted_rows: &[u32],
    _total_sum: f64,
    _parent_score: f64,
    params: &TreeParams,
) -> Option<BestSplit> {
    let n = sorted_rows.len();
    if n < 2 * params.min_leaf {
        return None;
    }
    // Per-category sums; categories are small non-negative indices.
    let mut stats: Vec<(u32, f64, usize)> = Vec::new();
    for &r in sorted_rows {
        let cat = data.columns[feature][r as usize] as u32;
        match stats.iter_mut().find(|(c, _, _)| *c == cat) {
            Some((_, sum, count)) => {
                *sum += data.grad[r as usize];
                *count += 1;
            }
            None => stats.push((cat, data.grad[r as usize], 1)),
        }
    }
    if stats.len() < 2 {
        return None;
    }
    // Order categories by mean response, then scan as an ordered feature.
    stats.sort_by(|a, b| {
        let ma = a.1 / a.2 as f64;
        let mb = b.1 / b.2 as f64;
        ma.partial_cmp(&mb).unwrap().then(a.0.cmp(&b.0))
    });
    let finite_sum: f64 = stats.iter().map(|s| s.1).sum();
    let parent_finite = finite_sum * finite_sum / n as f64;

    let mut best_gain = 0.0;
    let mut best_k = 0usize;
    let mut left_sum = 0.0;
    let mut left_n = 0usize;
    for (k, (_, sum, count)) in stats.iter().enumerate().take(stats.len() - 1) {
        left_sum += sum;
        left_n += count;
        let right_n = n - left_n;
        if left_n < params.min_leaf || right_n < params.min_leaf {
            continue;
        }
        let right_sum = finite_sum - left_sum;
        let score = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
        let gain = score - parent_finite;
        if gain > best_gain {
            best_gain = gain;
            best_k = k + 1;
        }
    }
    if best_k == 0 {
        return None;
    }
    let mut set: Vec<u32> = stats[..best_k].iter().map(|s| s.0).collect();
    set.sort_unstable();
    let left_n: usize = stats[..best_k].iter().map(|s| s.2).sum();
    Some(BestSplit {
        feature,
        test: SplitTest::Categories(set),
        gain: best_gain,
        default_left: left_n >= n - left_n,
    })
}

fn leaf_value(targets: &[f64], loss: Loss) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    match loss {
        Loss::Squared => targets.iter().sum::<f64>() / targets.len() as f64,
        Loss::Quantile(beta) => {
            let mut sorted = targets.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            quantile(&sorted, beta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ColumnKind;

    fn grow_simple(columns: Vec<Vec<f64>>, kinds: Vec<ColumnKind>, y: Vec<f64>) -> Tree {
        let rows: Vec<u32> = (0..y.len() as u32).collect();
        let features: Vec<usize> = (0..columns.len()).collect();
        let data = TreeData { columns: &columns, kinds: &kinds, grad: &y, refit: &y };
        let mut gains = vec![0.0; columns.len()];
        grow(
            &data,
            &rows,
            &features,
            &TreeParams { max_depth: 4, min_leaf: 1, loss: Loss::Squared },
            &mut gains,
        )
    }

    #[test]
    fn learns_step_function() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v < 10.0 { -1.0 } else { 3.0 }).collect();
        let tree = grow_simple(vec![x], vec![ColumnKind::Numeric], y);
        assert_eq!(tree.predict(&[4.0]), -1.0);
        assert_eq!(tree.predict(&[15.0]), 3.0);
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![7.0; 10];
        let tree = grow_simple(vec![x], vec![ColumnKind::Numeric], y);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&[3.0]), 7.0);
    }

    #[test]
    fn categorical_membership_split() {
        // Categories 0 and 2 low, 1 and 3 high.
        let cats = vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0];
        let y = vec![-2.0, 5.0, -2.0, 5.0, -2.0, 5.0, -2.0, 5.0];
        let tree = grow_simple(vec![cats], vec![ColumnKind::Categorical], y);
        assert_eq!(tree.predict(&[0.0]), -2.0);
        assert_eq!(tree.predict(&[2.0]), -2.0);
        assert_eq!(tree.predict(&[1.0]), 5.0);
        assert_eq!(tree.predict(&[3.0]), 5.0);
    }

    #[test]
    fn missing_values_follow_bigger_child() {
        let mut x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        x.push(f64::NAN);
        let mut y: Vec<f64> = x[..9].iter().map(|&v| if v < 3.0 { 0.0 } else { 10.0 }).collect();
        y.push(10.0);
        let tree = grow_simple(vec![x], vec![ColumnKind::Numeric], y);
        // The right child holds 6 finite rows plus the missing one.
        assert_eq!(tree.predict(&[f64::NAN]), 10.0);
    }

    #[test]
    fn depth_is_capped() {
        let x: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| v.sin() * 10.0).collect();
        let rows: Vec<u32> = (0..64).collect();
        let columns = vec![x];
        let kinds = vec![ColumnKind::Numeric];
        let data = TreeData { columns: &columns, kinds: &kinds, grad: &y, refit: &y };
        let mut gains = vec![0.0; 1];
        let tree = grow(
            &data,
            &rows,
            &[0],
            &TreeParams { max_depth: 3, min_leaf: 1, loss: Loss::Squared },
            &mut gains,
        );
        assert!(tree.depth() <= 3);
        assert!(gains[0] > 0.0);
    }
}
