//! Tree-based classifiers and grid-search tuning.

mod boost;
mod forest;
mod grid;
mod tree;

use serde::{Deserialize, Serialize};

pub use boost::{fit_boost, BoostConfig, BoostModel, HESSIAN_FLOOR};
pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use grid::{grid_search, GridResult, GridRow, HyperGrid};
pub use tree::{DecisionTree, FeatureRule, Tree, TreeNode};

use crate::dataset::{Dataset, SLOW};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Forest,
    Boost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Tree, ModelKind::Forest, ModelKind::Boost];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Boost => "boost",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            "boost" => Ok(ModelKind::Boost),
            other => Err(Error::Parameter(format!("unknown classifier '{other}'"))),
        }
    }
}

/// Hyperparameters shared by all classifier kinds. `n_trees` is the
/// number of boosting rounds for [`ModelKind::Boost`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub n_trees: usize,
    pub learning_rate: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            max_depth: 8,
            min_samples_split: 2,
            n_trees: 50,
            learning_rate: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, params: ModelParams) -> Self {
        ModelSpec { kind, params }
    }

    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<TrainedModel> {
        let p = &self.params;
        Ok(match self.kind {
            ModelKind::Tree => TrainedModel::Tree(fit_tree(data, p.max_depth, p.min_samples_split, seed)?),
            ModelKind::Forest => {
                let cfg = ForestConfig {
                    min_samples_split: p.min_samples_split,
                    ..ForestConfig::new(p.n_trees, p.max_depth)
                };
                TrainedModel::Forest(fit_forest(data, &cfg, seed)?)
            }
            ModelKind::Boost => {
                let cfg = BoostConfig {
                    min_samples_split: p.min_samples_split,
                    ..BoostConfig::new(p.n_trees, p.learning_rate, p.max_depth)
                };
                TrainedModel::Boost(fit_boost(data, &cfg, seed)?)
            }
        })
    }
}

/// Fits a single CART tree on all features. A single-class input yields a
/// one-leaf tree.
pub fn fit_tree(data: &Dataset, max_depth: usize, min_samples_split: usize, seed: u64) -> Result<DecisionTree> {
    if data.n() < min_samples_split {
        return Err(Error::Parameter(format!(
            "{} rows is below min_samples_split {min_samples_split}",
            data.n()
        )));
    }
    Ok(tree::fit_classification_tree(
        data.features(),
        data.labels(),
        (0..data.n()).collect(),
        max_depth,
        min_samples_split,
        FeatureRule::All,
        seed,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Tree(DecisionTree),
    Forest(ForestModel),
    Boost(BoostModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Tree(_) => ModelKind::Tree,
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Boost(_) => ModelKind::Boost,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        match self {
            TrainedModel::Tree(t) => t.predict_proba(row),
            TrainedModel::Forest(f) => f.predict_proba(row),
            TrainedModel::Boost(b) => b.predict_proba(row),
        }
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        if self.predict_proba(row) > 0.5 {
            SLOW
        } else {
            1 - SLOW
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Vec<u8> {
        (0..data.n()).map(|i| self.predict(data.row(i))).collect()
    }

    fn trees(&self) -> Vec<&Tree> {
        match self {
            TrainedModel::Tree(t) => vec![&t.tree],
            TrainedModel::Forest(f) => f.trees.iter().map(|t| &t.tree).collect(),
            TrainedModel::Boost(b) => b.trees.iter().collect(),
        }
    }

    pub fn summary(&self, feature_names: &[String]) -> ModelSummary {
        let trees = self.trees();
        let mut gains = vec![0.0; feature_names.len()];
        for t in &trees {
            for (g, v) in gains.iter_mut().zip(t.feature_gains()) {
                *g += v;
            }
        }
        let total: f64 = gains.iter().sum();
        if total > 0.0 {
            gains.iter_mut().for_each(|g| *g /= total);
        }
        ModelSummary {
            kind: self.kind(),
            n_trees: trees.len(),
            max_depth: trees.iter().map(|t| t.depth()).max().unwrap_or(0),
            node_count: trees.iter().map(|t| t.nodes().len()).sum(),
            leaf_count: trees.iter().map(|t| t.leaf_count()).sum(),
            feature_importances: feature_names
                .iter()
                .cloned()
                .zip(gains)
                .map(|(feature, importance)| FeatureImportance { feature, importance })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

/// JSON-friendly description of a fitted model. Importances are split
/// gains normalised to sum to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub node_count: usize,
    pub leaf_count: usize,
    pub feature_importances: Vec<FeatureImportance>,
}
