//! Exact k-nearest-neighbour queries in (optionally) standardized feature space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NORMAL};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Columns whose population std falls below this are treated as constant.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    #[default]
    Standardized,
    Raw,
}

/// Z-scored copy of a feature matrix.
#[derive(Clone, Debug)]
pub struct StandardizedView {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    scaled: Matrix,
}

impl StandardizedView {
    pub fn scaled(&self) -> &Matrix {
        &self.scaled
    }

    pub fn n(&self) -> usize {
        self.scaled.rows()
    }

    /// Identity view over raw features.
    pub fn raw(features: &Matrix) -> Self {
        StandardizedView {
            means: vec![0.0; features.cols()],
            stds: vec![1.0; features.cols()],
            scaled: features.clone(),
        }
    }

    pub fn build(features: &Matrix, space: Space) -> Result<Self> {
        match space {
            Space::Standardized => standardize_matrix(features),
            Space::Raw => Ok(StandardizedView::raw(features)),
        }
    }

    #[inline]
    fn dist2(&self, a: usize, b: usize) -> f64 {
        self.scaled
            .row(a)
            .iter()
            .zip(self.scaled.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }
}

pub fn standardize(dataset: &Dataset) -> Result<StandardizedView> {
    standardize_matrix(dataset.features())
}

/// Population z-score per column; constant columns are centred and scaled by 1.
pub fn standardize_matrix(features: &Matrix) -> Result<StandardizedView> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::Parameter(format!("standardize needs n >= 2, got {n}")));
    }
    let means = features.column_means();
    let mut vars = vec![0.0; features.cols()];
    for r in features.iter_rows() {
        for ((v, &x), &m) in vars.iter_mut().zip(r).zip(&means) {
            *v += (x - m) * (x - m);
        }
    }
    let stds: Vec<f64> = vars
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s < STD_FLOOR {
                1.0
            } else {
                s
            }
        })
        .collect();
    let mut scaled = features.clone();
    for i in 0..n {
        for (j, v) in scaled.row_mut(i).iter_mut().enumerate() {
            *v = (*v - means[j]) / stds[j];
        }
    }
    Ok(StandardizedView { means, stds, scaled })
}

/// Candidate rows for a neighbour query.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    AllRows,
    Rows(&'a [usize]),
}

impl Scope<'_> {
    fn len(&self, n: usize) -> usize {
        match self {
            Scope::AllRows => n,
            Scope::Rows(r) => r.len(),
        }
    }
}

/// The `k` rows nearest to `query` within `scope`, excluding `query` itself,
/// ordered by ascending distance with ties broken by ascending index.
pub fn knn(view: &StandardizedView, query: usize, k: usize, scope: Scope<'_>) -> Result<Vec<usize>> {
    let n = view.n();
    if query >= n {
        return Err(Error::Parameter(format!("query row {query} out of range")));
    }
    let size = scope.len(n);
    if k == 0 || k >= size {
        return Err(Error::Parameter(format!(
            "k = {k} must satisfy 1 <= k < scope size {size}"
        )));
    }
    let mut cand: Vec<(f64, usize)> = match scope {
        Scope::AllRows => (0..n)
            .filter(|&j| j != query)
            .map(|j| (view.dist2(query, j), j))
            .collect(),
        Scope::Rows(rows) => rows
            .iter()
            .filter(|&&j| j != query)
            .map(|&j| (view.dist2(query, j), j))
            .collect(),
    };
    if cand.len() < k {
        return Err(Error::Parameter(format!("only {} candidates for k = {k}", cand.len())));
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    // Fresh allocation: collecting in place would keep the n-sized buffer.
    let mut out = Vec::with_capacity(k);
    out.extend(cand.iter().map(|&(_, j)| j));
    Ok(out)
}

/// [`knn`] for many queries, evaluated in parallel.
pub fn knn_many(view: &StandardizedView, queries: &[usize], k: usize, scope: Scope<'_>) -> Result<Vec<Vec<usize>>> {
    queries.par_iter().map(|&q| knn(view, q, k, scope)).collect()
}

/// Δ: how many of the `k` all-rows neighbours of `query` are majority rows.
pub fn majority_count_in_knn(view: &StandardizedView, query: usize, k: usize, labels: &[u8]) -> Result<usize> {
    Ok(knn(view, query, k, Scope::AllRows)?
        .into_iter()
        .filter(|&j| labels[j] == NORMAL)
        .count())
}
