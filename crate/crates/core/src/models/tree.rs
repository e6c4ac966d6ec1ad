//! Binary CART trees stored in an index arena.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// `value` is the slow-class probability for classification trees and
    /// the additive score for boosting trees.
    Leaf { value: f64, samples: usize },
    Split {
        feature: usize,
        threshold: f64,
        /// Impurity decrease weighted by node size.
        gain: f64,
        samples: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    n_features: usize,
}

impl Tree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Rows with `x[feature] <= threshold` go left.
    pub fn value(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn feature_gains(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n_features];
        for n in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = n {
                g[*feature] += gain;
            }
        }
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRule {
    All,
    /// `⌈√d⌉` features drawn per split.
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Criterion {
    Gini,
    /// Squared-error reduction on a real-valued target.
    Variance,
}

pub(crate) struct GrowSpec<'a> {
    pub x: &'a Matrix,
    pub target: &'a [f64],
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub feature_rule: FeatureRule,
    pub seed: u64,
    pub leaf: &'a dyn Fn(&[usize]) -> f64,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
    split_at: usize,
    sorted: Vec<usize>,
}

/// Impurity-style score of a split to be minimised, from left/right sizes
/// and target sums.
fn split_score(criterion: Criterion, nl: f64, sl: f64, nr: f64, sr: f64) -> f64 {
    match criterion {
        Criterion::Gini => {
            let gini = |n: f64, s: f64| {
                let p = s / n;
                1.0 - p * p - (1.0 - p) * (1.0 - p)
            };
            (nl * gini(nl, sl) + nr * gini(nr, sr)) / (nl + nr)
        }
        Criterion::Variance => -(sl * sl / nl + sr * sr / nr),
    }
}

fn node_score(criterion: Criterion, n: f64, s: f64) -> f64 {
    match criterion {
        Criterion::Gini => {
            let p = s / n;
            1.0 - p * p - (1.0 - p) * (1.0 - p)
        }
        Criterion::Variance => -(s * s / n),
    }
}

impl GrowSpec<'_> {
    pub fn grow(&self, rows: Vec<usize>) -> Tree {
        let mut tree = Tree {
            nodes: Vec::new(),
            n_features: self.x.cols(),
        };
        let mut rng = seeding::stream(self.seed, &[seeding::tag("tree")]);
        self.grow_node(&mut tree, rows, 0, &mut rng);
        tree
    }

    fn grow_node(&self, tree: &mut Tree, rows: Vec<usize>, depth: usize, rng: &mut seeding::Rng) -> usize {
        let id = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf {
            value: (self.leaf)(&rows),
            samples: rows.len(),
        });
        if depth >= self.max_depth || rows.len() < self.min_samples_split.max(2) || self.is_pure(&rows) {
            return id;
        }
        let Some(best) = self.best_split(&rows, rng) else {
            return id;
        };
        let n = rows.len() as f64;
        let s: f64 = rows.iter().map(|&i| self.target[i]).sum();
        let gain = match self.criterion {
            Criterion::Gini => n * (node_score(Criterion::Gini, n, s) - best.score),
            Criterion::Variance => node_score(Criterion::Variance, n, s) - best.score,
        };
        let (l, r) = best.sorted.split_at(best.split_at);
        let (l, r) = (l.to_vec(), r.to_vec());
        let samples = rows.len();
        drop(rows);
        let left = self.grow_node(tree, l, depth + 1, rng);
        let right = self.grow_node(tree, r, depth + 1, rng);
        tree.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain,
            samples,
            left,
            right,
        };
        id
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        let first = self.target[rows[0]];
        rows.iter().all(|&i| self.target[i] == first)
    }

    fn candidate_features(&self, rng: &mut seeding::Rng) -> Vec<usize> {
        let d = self.x.cols();
        match self.feature_rule {
            FeatureRule::All => (0..d).collect(),
            FeatureRule::Sqrt => {
                let m = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
        }
    }

    /// Exhaustive search over candidate features and midpoints between
    /// consecutive distinct values; ties keep the earlier feature and the
    /// lower threshold.
    fn best_split(&self, rows: &[usize], rng: &mut seeding::Rng) -> Option<Best> {
        let n = rows.len();
        let total: f64 = rows.iter().map(|&i| self.target[i]).sum();
        let mut best: Option<Best> = None;
        for f in self.candidate_features(rng) {
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)));
            let mut sl = 0.0;
            let mut found: Option<(f64, f64, usize)> = None;
            for pos in 0..n - 1 {
                sl += self.target[sorted[pos]];
                let lo = self.x.get(sorted[pos], f);
                let hi = self.x.get(sorted[pos + 1], f);
                if lo >= hi {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let score = split_score(self.criterion, nl, sl, n as f64 - nl, total - sl);
                if found.is_none_or(|(s, _, _)| score < s) {
                    let mut thr = 0.5 * (lo + hi);
                    if thr >= hi {
                        thr = lo;
                    }
                    found = Some((score, thr, pos + 1));
                }
            }
            if let Some((score, threshold, split_at)) = found {
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Best {
                        feature: f,
                        threshold,
                        score,
                        split_at,
                        sorted,
                    });
                }
            }
        }
        best
    }
}

/// A fitted classification tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree: Tree,
}

impl DecisionTree {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.tree.value(row)
    }

    /// `[P(normal), P(slow)]` at the row's leaf.
    pub fn class_probabilities(&self, row: &[f64]) -> [f64; 2] {
        let p = self.predict_proba(row);
        [1.0 - p, p]
    }
}

pub(crate) fn fit_classification_tree(
    x: &Matrix,
    labels: &[u8],
    rows: Vec<usize>,
    max_depth: usize,
    min_samples_split: usize,
    feature_rule: FeatureRule,
    seed: u64,
) -> DecisionTree {
    let target: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let leaf = |r: &[usize]| r.iter().map(|&i| target[i]).sum::<f64>() / r.len() as f64;
    let spec = GrowSpec {
        x,
        target: &target,
        criterion: Criterion::Gini,
        max_depth,
        min_samples_split,
        feature_rule,
        seed,
        leaf: &leaf,
    };
    DecisionTree { tree: spec.grow(rows) }
}
