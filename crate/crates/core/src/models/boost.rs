//! Gradient boosting on the logistic loss with Newton leaf values.

use serde::{Deserialize, Serialize};

use super::tree::{Criterion, FeatureRule, GrowSpec, Tree};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::generative::sigmoid;

pub const HESSIAN_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl BoostConfig {
    pub fn new(n_rounds: usize, learning_rate: f64, max_depth: usize) -> Self {
        BoostConfig {
            n_rounds,
            learning_rate,
            max_depth,
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

impl BoostModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.value(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.score(row))
    }
}

fn log_loss(y: &[f64], f: &[f64]) -> f64 {
    // -[y ln σ(f) + (1-y) ln(1-σ(f))] = softplus(f) - y f
    let total: f64 = y
        .iter()
        .zip(f)
        .map(|(&y, &f)| crate::generative::softplus(f) - y * f)
        .sum();
    total / y.len() as f64
}

pub fn fit_boost(data: &Dataset, cfg: &BoostConfig, seed: u64) -> Result<BoostModel> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Parameter(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    let n = data.n();
    let y: Vec<f64> = data.labels().iter().map(|&l| l as f64).collect();
    let pos: f64 = y.iter().sum();
    if pos == 0.0 || pos == n as f64 {
        return Err(Error::Parameter("boosting needs both classes present".into()));
    }
    let p0 = pos / n as f64;
    let init = (p0 / (1.0 - p0)).ln();
    let mut f = vec![init; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut loss_trace = vec![log_loss(&y, &f)];
    for round in 0..cfg.n_rounds {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let resid: Vec<f64> = y.iter().zip(&p).map(|(y, p)| y - p).collect();
        let hess: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let leaf = |rows: &[usize]| {
            let r: f64 = rows.iter().map(|&i| resid[i]).sum();
            let h: f64 = rows.iter().map(|&i| hess[i]).sum();
            r / h.max(HESSIAN_FLOOR)
        };
        let spec = GrowSpec {
            x: data.features(),
            target: &resid,
            criterion: Criterion::Variance,
            max_depth: cfg.max_depth,
            min_samples_split: cfg.min_samples_split,
            feature_rule: FeatureRule::All,
            seed: crate::seeding::derive_seed(seed, &[round as u64]),
            leaf: &leaf,
        };
        let tree = spec.grow((0..n).collect());
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += cfg.learning_rate * tree.value(data.row(i));
        }
        loss_trace.push(log_loss(&y, &f));
        trees.push(tree);
    }
    Ok(BoostModel {
        init,
        learning_rate: cfg.learning_rate,
        trees,
        loss_trace,
    })
}
