use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{f1, ConfusionCounts};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::seeding;

/// Deals each class's shuffled rows round-robin over `k` folds. The second
/// class starts where the first left off, so fold sizes differ by at most
/// one and per-fold class counts by at most one.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = seeding::stream(seed, &[seeding::tag("kfold")]);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..data.n()).filter(|&i| data.label(i) == class).collect();
        if idx.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} rows, fewer than {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            folds[(offset + j) % k].push(i);
        }
        offset = (offset + idx.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_f1: Vec<f64>,
    /// Unweighted mean of the per-fold scores.
    pub mean_f1: f64,
    pub pooled: ConfusionCounts,
}

pub fn cross_val_f1(data: &Dataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<CvResult> {
    let folds = stratified_kfold(data, k, seed)?;
    let mut fold_of = vec![0; data.n()];
    for (f, rows) in folds.iter().enumerate() {
        for &i in rows {
            fold_of[i] = f;
        }
    }
    let counts = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| fold_of[i] != f).collect();
            let test = data.select(&folds[f])?;
            let model = spec.fit(&data.select(&train)?, seeding::derive_seed(seed, &[f as u64]))?;
            ConfusionCounts::from_predictions(test.labels(), &model.predict_all(&test))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_f1: Vec<f64> = counts.iter().map(f1).collect();
    let pooled = counts.iter().fold(ConfusionCounts::default(), |a, c| a.merge(c));
    Ok(CvResult {
        mean_f1: fold_f1.iter().sum::<f64>() / k as f64,
        fold_f1,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn labelled(n_pos: usize, n_neg: usize) -> Dataset {
        let n = n_pos + n_neg;
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let y = (0..n).map(|i| u8::from(i < n_pos)).collect();
        Dataset::unnamed(x, y).unwrap()
    }

    #[test]
    fn balanced_exact_division() {
        let ds = labelled(50, 50);
        let folds = stratified_kfold(&ds, 10, 1).unwrap();
        for f in &folds {
            let pos = f.iter().filter(|&&i| ds.label(i) == 1).count();
            assert_eq!((pos, f.len() - pos), (5, 5));
        }
    }

    #[test]
    fn remainder_sizes() {
        let ds = labelled(37, 64);
        let folds = stratified_kfold(&ds, 10, 2).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
    }

    #[test]
    fn small_class_rejected() {
        let ds = labelled(9, 50);
        assert!(matches!(stratified_kfold(&ds, 10, 0), Err(Error::Stratification(_))));
    }
}
