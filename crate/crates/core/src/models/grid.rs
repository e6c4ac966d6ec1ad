use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelParams, ModelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluate::cross_val_f1;

/// Candidate values per hyperparameter. Parameters that do not apply to a
/// classifier kind are ignored for that kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub folds: usize,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            max_depth: vec![4, 8, 12],
            min_samples_split: vec![2, 10],
            n_trees: vec![50],
            learning_rate: vec![0.1],
            folds: 10,
        }
    }
}

impl HyperGrid {
    pub fn single(params: ModelParams, folds: usize) -> Self {
        HyperGrid {
            max_depth: vec![params.max_depth],
            min_samples_split: vec![params.min_samples_split],
            n_trees: vec![params.n_trees],
            learning_rate: vec![params.learning_rate],
            folds,
        }
    }

    /// Grid points for `kind` in declaration order.
    pub fn points(&self, kind: ModelKind) -> Vec<ModelParams> {
        let base = ModelParams::default();
        let trees: Vec<Option<usize>> = match kind {
            ModelKind::Tree => vec![None],
            _ => self.n_trees.iter().copied().map(Some).collect(),
        };
        let rates: Vec<Option<f64>> = match kind {
            ModelKind::Boost => self.learning_rate.iter().copied().map(Some).collect(),
            _ => vec![None],
        };
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &min_samples_split in &self.min_samples_split {
                for &t in &trees {
                    for &lr in &rates {
                        out.push(ModelParams {
                            max_depth,
                            min_samples_split,
                            n_trees: t.unwrap_or(base.n_trees),
                            learning_rate: lr.unwrap_or(base.learning_rate),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: ModelParams,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub kind: ModelKind,
    pub best: ModelParams,
    pub best_mean_f1: f64,
    pub rows: Vec<GridRow>,
}

/// Exhaustive stratified-CV search. The highest mean F1 wins; ties go to
/// the earliest grid point.
pub fn grid_search(data: &Dataset, kind: ModelKind, grid: &HyperGrid, seed: u64) -> Result<GridResult> {
    let points = grid.points(kind);
    if points.is_empty() {
        return Err(Error::Parameter("hyperparameter grid is empty".into()));
    }
    let rows = points
        .into_par_iter()
        .map(|params| {
            let cv = cross_val_f1(data, &ModelSpec::new(kind, params), grid.folds, seed)?;
            Ok(GridRow {
                params,
                fold_f1: cv.fold_f1,
                mean_f1: cv.mean_f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean_f1 > rows[best].mean_f1 {
            best = i;
        }
    }
    Ok(GridResult {
        kind,
        best: rows[best].params,
        best_mean_f1: rows[best].mean_f1,
        rows,
    })
}
