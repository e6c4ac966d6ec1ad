//! Flow-record datasets: the row-major feature matrix with binary slow/normal
//! labels that every pipeline stage consumes and produces.

mod csvio;
mod scheme;
mod synth;

use std::collections::HashSet;

pub(crate) use csvio::stamped_writer;
pub use csvio::{load_csv, write_csv, write_tagged_csv, CsvOptions};
pub use scheme::{apply_scheme, CountRule, SamplingScheme};
pub use synth::{generate_flows, FlowProfile, FLOW_FEATURES};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Label of slow (minority, positive) transfers.
pub const SLOW: u8 = 1;
/// Label of normal (majority) transfers.
pub const NORMAL: u8 = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.cols() == 0 {
            return Err(Error::Schema("dataset needs at least one feature".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Schema(format!("label {bad} is not binary")));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    /// Convenience constructor naming features `f0..f{d-1}`.
    pub fn unnamed(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("f{j}")).collect();
        Dataset::new(features, labels, names)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    #[inline]
    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.column(j)
    }

    pub fn select(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.feature_names.clone(),
        )
    }

    /// Appends rows of `other`, which must share the feature schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.feature_names != other.feature_names {
            return Err(Error::Schema("feature names differ".into()));
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(
            self.features.vstack(&other.features)?,
            labels,
            self.feature_names.clone(),
        )
    }

    /// Rows of one class as a bare matrix.
    pub fn class_rows(&self, label: u8) -> Matrix {
        let idx: Vec<usize> = (0..self.n()).filter(|&i| self.labels[i] == label).collect();
        self.features.select_rows(&idx)
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Dataset> {
        Dataset::new(self.features.clone(), labels, self.feature_names.clone())
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Removes a named feature, returning the remaining dataset and the
    /// removed values.
    pub fn split_off_column(&self, name: &str) -> Result<(Dataset, Vec<f64>)> {
        let j = self
            .feature_index(name)
            .ok_or_else(|| Error::Schema(format!("no column `{name}`")))?;
        let keep: Vec<usize> = (0..self.d()).filter(|&c| c != j).collect();
        let mut features = Matrix::zeros(self.n(), keep.len());
        for i in 0..self.n() {
            let src = self.row(i);
            for (o, &c) in features.row_mut(i).iter_mut().zip(&keep) {
                *o = src[c];
            }
        }
        let names = keep.iter().map(|&c| self.feature_names[c].clone()).collect();
        Ok((Dataset::new(features, self.labels.clone(), names)?, self.column(j)))
    }
}

/// Minority (slow) and majority (normal) row indices and their imbalance ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassPartition {
    pub minority_idx: Vec<usize>,
    pub majority_idx: Vec<usize>,
    /// `|C_min| / |C_maj|`.
    pub ir: f64,
}

impl ClassPartition {
    pub fn n_min(&self) -> usize {
        self.minority_idx.len()
    }

    pub fn n_maj(&self) -> usize {
        self.majority_idx.len()
    }
}

pub fn partition(dataset: &Dataset) -> Result<ClassPartition> {
    let (minority_idx, majority_idx): (Vec<usize>, Vec<usize>) =
        (0..dataset.n()).partition(|&i| dataset.label(i) == SLOW);
    if majority_idx.is_empty() {
        return Err(Error::UndefinedIr);
    }
    let ir = minority_idx.len() as f64 / majority_idx.len() as f64;
    Ok(ClassPartition {
        minority_idx,
        majority_idx,
        ir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(labels: Vec<u8>) -> Dataset {
        let n = labels.len();
        let m = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::unnamed(m, labels).unwrap()
    }

    #[test]
    fn partition_balanced_matches_train2_ratio() {
        let p = partition(&labelled(vec![1, 1, 1, 0, 0, 0])).unwrap();
        assert_eq!(p.ir, 1.0);
        assert_eq!(p.minority_idx, vec![0, 1, 2]);
        assert_eq!(p.majority_idx, vec![3, 4, 5]);
    }

    #[test]
    fn partition_train5_ratio() {
        let mut labels = vec![1u8; 1000];
        labels.extend(std::iter::repeat_n(0u8, 10_000));
        let p = partition(&labelled(labels)).unwrap();
        assert!((p.ir - 0.1).abs() < 1e-15);
        assert_eq!(p.n_min() + p.n_maj(), 11_000);
    }

    #[test]
    fn partition_without_majority_is_undefined() {
        assert!(matches!(partition(&labelled(vec![1, 1, 1])), Err(Error::UndefinedIr)));
    }

    #[test]
    fn partition_without_minority_has_zero_ir() {
        assert_eq!(partition(&labelled(vec![0, 0])).unwrap().ir, 0.0);
    }

    #[test]
    fn rejects_bad_construction() {
        let m = Matrix::from_vec(2, 2, vec![0.0; 4]).unwrap();
        assert!(Dataset::new(m.clone(), vec![0, 2], vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(m.clone(), vec![0, 1], vec!["a".into(), "a".into()]).is_err());
        assert!(matches!(
            Dataset::new(Matrix::empty(2), vec![], vec!["a".into(), "b".into()]),
            Err(Error::EmptyDataset)
        ));
    }
}
