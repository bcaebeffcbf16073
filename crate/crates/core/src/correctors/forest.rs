//! Bootstrap-aggregated regression trees with variance-reduction splits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{BapcError, Result};
use crate::exec::{self, Execution};
use crate::rng::{SeedTree, BOOTSTRAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSpec {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestSpec {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_samples_leaf: 2, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Grow a tree on `data` restricted to the (possibly repeated) `sample`
    /// indices.
    pub fn grow(data: &LabeledDataset, sample: Vec<usize>, max_depth: Option<usize>, min_leaf: usize) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.build(data, sample, 0, max_depth, min_leaf.max(1));
        tree
    }

    fn build(&mut self, data: &LabeledDataset, idx: Vec<usize>, depth: usize, max_depth: Option<usize>, min_leaf: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(leaf_value(data.ys(), &idx)));
        if max_depth.is_some_and(|m| depth >= m) || idx.len() < 2 * min_leaf {
            return at;
        }
        let Some((feature, threshold)) = best_split(data, &idx, min_leaf) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.x(i)[feature] <= threshold);
        let left = self.build(data, l, depth + 1, max_depth, min_leaf);
        let right = self.build(data, r, depth + 1, max_depth, min_leaf);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

/// Mean of the labels, kept inside their range despite rounding.
fn leaf_value(ys: &[f64], idx: &[usize]) -> f64 {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &i in idx {
        lo = lo.min(ys[i]);
        hi = hi.max(ys[i]);
        sum += ys[i];
    }
    (sum / idx.len() as f64).clamp(lo, hi)
}

fn best_split(data: &LabeledDataset, idx: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
    let ys = data.ys();
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| ys[i]).sum();
    let mean = total / n as f64;
    let sse_all: f64 = idx.iter().map(|&i| (ys[i] - mean).powi(2)).sum();
    if sse_all <= 1e-14 * (1.0 + mean * mean) * n as f64 {
        return None;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..data.dim() {
        order.sort_by(|&a, &b| data.x(a)[f].total_cmp(&data.x(b)[f]));
        // shift labels by the node mean for numerical stability
        let (mut sl, mut ql) = (0.0, 0.0);
        let (sum_c, sq_c) = order.iter().fold((0.0, 0.0), |(s, q), &i| {
            let v = ys[i] - mean;
            (s + v, q + v * v)
        });
        for k in 0..n - 1 {
            let v = ys[order[k]] - mean;
            sl += v;
            ql += v * v;
            let nl = k + 1;
            let nr = n - nl;
            let (xa, xb) = (data.x(order[k])[f], data.x(order[k + 1])[f]);
            if nl < min_leaf || nr < min_leaf || xa == xb {
                continue;
            }
            let sr = sum_c - sl;
            let qr = sq_c - ql;
            let sse = (ql - sl * sl / nl as f64) + (qr - sr * sr / nr as f64);
            if best.as_ref().is_none_or(|b| sse < b.0) {
                let mid = xa + (xb - xa) / 2.0;
                let threshold = if mid < xb { mid } else { xa };
                best = Some((sse, f, threshold));
            }
        }
    }
    best.filter(|b| b.0 < sse_all * (1.0 - 1e-12)).map(|b| (b.1, b.2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
    label_range: (f64, f64),
}

impl RandomForest {
    pub fn train(spec: &ForestSpec, data: &LabeledDataset, exec: Execution) -> Result<RandomForest> {
        if spec.n_trees == 0 {
            return Err(BapcError::Domain("forest needs at least one tree".into()));
        }
        let n = data.len();
        let seeds = SeedTree::new(spec.seed);
        let trees = exec::map_range(exec, spec.n_trees, |t| {
            let sample: Vec<usize> = if spec.bootstrap {
                let mut rng = seeds.indexed(BOOTSTRAP, t as u64);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            RegressionTree::grow(data, sample, spec.max_depth, spec.min_samples_leaf)
        });
        let ys = data.ys();
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(RandomForest { trees, label_range: (lo, hi) })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        (sum / self.trees.len() as f64).clamp(self.label_range.0, self.label_range.1)
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> LabeledDataset {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 2.0 { -1.0 } else { 3.0 }).collect();
        LabeledDataset::from_scalar(&xs, &ys).unwrap()
    }

    fn mse(f: &RandomForest, d: &LabeledDataset) -> f64 {
        d.xs().iter().zip(d.ys()).map(|(x, y)| (f.predict(x) - y).powi(2)).sum::<f64>() / d.len() as f64
    }

    #[test]
    fn zero_labels_give_exact_zero() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let d = LabeledDataset::from_scalar(&xs, &[0.0; 20]).unwrap();
        let f = RandomForest::train(&ForestSpec::default(), &d, Execution::Sequential).unwrap();
        assert!([-3.0, 0.0, 7.5, 100.0].iter().all(|&x| f.predict(&[x]) == 0.0));
    }

    #[test]
    fn step_function_beats_label_variance() {
        let d = step_data();
        let mean = d.ys().iter().sum::<f64>() / d.len() as f64;
        let var = d.ys().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / d.len() as f64;
        for depth in [1, 2, 5] {
            let spec = ForestSpec { max_depth: Some(depth), seed: 9, ..Default::default() };
            let f = RandomForest::train(&spec, &d, Execution::Sequential).unwrap();
            assert!(mse(&f, &d) <= var, "depth {depth}");
        }
    }

    #[test]
    fn single_tree_without_bootstrap_finds_the_step() {
        let d = step_data();
        let t = RegressionTree::grow(&d, (0..d.len()).collect(), Some(1), 1);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[1.0]), -1.0);
        assert_eq!(t.predict(&[3.0]), 3.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let d = step_data();
        let spec = ForestSpec { seed: 4, ..Default::default() };
        let a = RandomForest::train(&spec, &d, Execution::Sequential).unwrap();
        let b = RandomForest::train(&spec, &d, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
