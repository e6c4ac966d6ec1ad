//! SMOTE-family and ADASYN minority oversampling.
//!
//! Every method maps a labelled [`Dataset`] plus a seed to an
//! [`AugmentedSet`]: the original rows, the synthetic minority rows, and
//! the provenance of each interpolated row. Neighbour searches run in the
//! space chosen by [`OversampleConfig::space`]; interpolation always happens
//! on raw feature values.

mod adasyn;
mod borderline;
mod cleaning;
mod smote;

pub use adasyn::{adasyn, adasyn_quotas};
pub use borderline::{borderline_smote, danger_set};
pub use cleaning::{smote_enn, smote_tomek, tomek_links};
pub use smote::smote;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NORMAL, SLOW};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::Space;

/// Row origin tags used in exported augmented sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Origin {
    Majority = 0,
    Minority = 1,
    Synthetic = 2,
}

/// Where an interpolated row came from: `parent + (neighbor - parent) * delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub parent: usize,
    pub neighbor: usize,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnnMode {
    /// Remove only rows the neighbourhood vote misclassifies.
    #[default]
    Standard,
    /// Remove a misclassified row together with its k neighbours.
    WithNeighbours,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomekPolicy {
    #[default]
    RemoveMajority,
    RemoveBoth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OversampleConfig {
    pub k: usize,
    /// Minority count after augmentation; `None` means match the majority.
    pub target: Option<usize>,
    pub space: Space,
    /// ADASYN: fraction of the class gap to fill.
    pub beta: f64,
    pub enn_mode: EnnMode,
    pub tomek_policy: TomekPolicy,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        OversampleConfig {
            k: 5,
            target: None,
            space: Space::Standardized,
            beta: 1.0,
            enn_mode: EnnMode::Standard,
            tomek_policy: TomekPolicy::RemoveMajority,
        }
    }
}

impl OversampleConfig {
    pub fn with_k(k: usize) -> Self {
        OversampleConfig {
            k,
            ..OversampleConfig::default()
        }
    }

    /// Number of synthetic rows needed to reach the target.
    pub(crate) fn synthetic_count(&self, n_min: usize, n_maj: usize) -> Result<usize> {
        let target = self.target.unwrap_or(n_maj);
        if target <= n_min {
            return Err(Error::Parameter(format!(
                "target {target} must exceed the current minority count {n_min}"
            )));
        }
        Ok(target - n_min)
    }
}

/// Original rows plus synthetic minority rows, with per-row retention after
/// any cleaning step.
#[derive(Clone, Debug)]
pub struct AugmentedSet {
    pub base: Dataset,
    pub synthetic: Matrix,
    /// Aligned with `synthetic`; `None` for rows from a generative model.
    pub provenance: Vec<Option<Provenance>>,
    pub kept_base: Vec<usize>,
    pub kept_synthetic: Vec<usize>,
}

impl AugmentedSet {
    pub fn new(base: Dataset, synthetic: Matrix, provenance: Vec<Option<Provenance>>) -> Result<Self> {
        if synthetic.cols() != base.d() {
            return Err(Error::Shape(format!(
                "synthetic rows have {} columns, base has {}",
                synthetic.cols(),
                base.d()
            )));
        }
        if provenance.len() != synthetic.rows() {
            return Err(Error::Shape("provenance length differs from synthetic rows".into()));
        }
        Ok(AugmentedSet {
            kept_base: (0..base.n()).collect(),
            kept_synthetic: (0..synthetic.rows()).collect(),
            base,
            synthetic,
            provenance,
        })
    }

    /// Base rows unchanged, no synthetic rows.
    pub fn unaugmented(base: Dataset) -> Self {
        let d = base.d();
        AugmentedSet::new(base, Matrix::empty(d), Vec::new()).expect("consistent shapes")
    }

    /// Retained base rows then retained synthetic rows, all synthetic rows
    /// labelled minority.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut features = self.base.features().select_rows(&self.kept_base);
        let mut labels: Vec<u8> = self.kept_base.iter().map(|&i| self.base.label(i)).collect();
        for &s in &self.kept_synthetic {
            features.push_row(self.synthetic.row(s));
            labels.push(SLOW);
        }
        Dataset::new(features, labels, self.base.feature_names().to_vec())
    }

    /// Origin tag of each row of [`AugmentedSet::to_dataset`].
    pub fn origins(&self) -> Vec<u8> {
        self.kept_base
            .iter()
            .map(|&i| {
                if self.base.label(i) == NORMAL {
                    Origin::Majority as u8
                } else {
                    Origin::Minority as u8
                }
            })
            .chain(self.kept_synthetic.iter().map(|_| Origin::Synthetic as u8))
            .collect()
    }

    pub fn synthetic_kept(&self) -> Matrix {
        self.synthetic.select_rows(&self.kept_synthetic)
    }

    pub fn len(&self) -> usize {
        self.kept_base.len() + self.kept_synthetic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies a keep-mask over the rows of [`AugmentedSet::to_dataset`].
    pub(crate) fn retain(&mut self, keep: &[bool]) {
        debug_assert_eq!(keep.len(), self.len());
        let nb = self.kept_base.len();
        let mut i = 0;
        self.kept_base.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut j = nb;
        self.kept_synthetic.retain(|_| {
            j += 1;
            keep[j - 1]
        });
    }
}

/// Interpolates `parent + (neighbor - parent) * delta` on raw features.
pub(crate) fn interpolate(parent: &[f64], neighbor: &[f64], delta: f64) -> Vec<f64> {
    parent
        .iter()
        .zip(neighbor)
        .map(|(&p, &q)| p + (q - p) * delta)
        .collect()
}

pub(crate) fn require_minority(n_min: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if n_min < k + 1 {
        return Err(Error::InsufficientMinority {
            required: k + 1,
            found: n_min,
        });
    }
    Ok(())
}
