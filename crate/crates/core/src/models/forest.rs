//! Bagged CART ensembles with per-split feature subsampling.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_classification_tree, DecisionTree, FeatureRule};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub feature_rule: FeatureRule,
    pub bootstrap: bool,
}

impl ForestConfig {
    pub fn new(n_trees: usize, max_depth: usize) -> Self {
        ForestConfig {
            n_trees,
            max_depth,
            min_samples_split: 2,
            feature_rule: FeatureRule::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub feature_rule: FeatureRule,
}

impl ForestModel {
    /// Fraction of trees voting slow.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict_proba(row) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

pub fn fit_forest(data: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    if cfg.n_trees == 0 {
        return Err(Error::Parameter("forest needs at least one tree".into()));
    }
    let n = data.n();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = seeding::derive_seed(seed, &[seeding::tag("forest"), t as u64]);
            let rows: Vec<usize> = if cfg.bootstrap {
                let mut rng = seeding::rng(tree_seed);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_classification_tree(
                data.features(),
                data.labels(),
                rows,
                cfg.max_depth,
                cfg.min_samples_split,
                cfg.feature_rule,
                tree_seed,
            )
        })
        .collect();
    Ok(ForestModel {
        trees,
        feature_rule: cfg.feature_rule,
    })
}
