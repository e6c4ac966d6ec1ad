//! Conditional tabular GAN over mode-normalized features, with
//! training-by-sampling of discrete conditions.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gan::{train_adversarial, Encoding, GanConfig, GenerativeMethod, GeneratorModel};
use super::mode::{ColumnCodec, ModeChoice, ModeNormalizer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCondition {
    /// Offset of this column's one-hot block in the encoded row.
    pub encoded_start: usize,
    /// Offset of this column's block in the condition vector.
    pub cond_offset: usize,
    pub counts: Vec<usize>,
    #[serde(skip)]
    rows: Vec<Vec<usize>>,
}

impl DiscreteCondition {
    pub fn width(&self) -> usize {
        self.counts.len()
    }

    /// Training-by-sampling law: category probability ∝ `ln(1 + count)`.
    pub fn training_probabilities(&self) -> Vec<f64> {
        normalise(self.counts.iter().map(|&c| (c as f64).ln_1p()).collect())
    }

    pub fn frequency_probabilities(&self) -> Vec<f64> {
        normalise(self.counts.iter().map(|&c| c as f64).collect())
    }
}

fn normalise(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn pick(probs: &[f64], rng: &mut seeding::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Condition vectors over the discrete columns of a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondSampler {
    pub columns: Vec<DiscreteCondition>,
    train_probs: Vec<Vec<f64>>,
    freq_probs: Vec<Vec<f64>>,
}

impl CondSampler {
    pub fn build(normalizer: &ModeNormalizer, data: &Matrix) -> Result<Option<Self>> {
        let mut columns = Vec::new();
        let mut enc_at = 0;
        let mut cond_at = 0;
        for (j, codec) in normalizer.columns.iter().enumerate() {
            if let ColumnCodec::Discrete { categories } = codec {
                let mut rows = vec![Vec::new(); categories.len()];
                for i in 0..data.rows() {
                    let v = data.get(i, j);
                    let pos = categories
                        .iter()
                        .position(|&c| c == v)
                        .ok_or_else(|| Error::Encoding(format!("unseen category {v}")))?;
                    rows[pos].push(i);
                }
                columns.push(DiscreteCondition {
                    encoded_start: enc_at,
                    cond_offset: cond_at,
                    counts: rows.iter().map(Vec::len).collect(),
                    rows,
                });
                cond_at += categories.len();
            }
            enc_at += codec.width();
        }
        if columns.is_empty() {
            return Ok(None);
        }
        Ok(Some(CondSampler {
            train_probs: columns.iter().map(DiscreteCondition::training_probabilities).collect(),
            freq_probs: columns.iter().map(DiscreteCondition::frequency_probabilities).collect(),
            columns,
        }))
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(DiscreteCondition::width).sum()
    }

    /// A uniformly chosen discrete column and a category drawn by the
    /// training-by-sampling law.
    pub fn sample_training(&self, rng: &mut seeding::Rng) -> (usize, usize) {
        let col = rng.random_range(0..self.columns.len());
        (col, pick(&self.train_probs[col], rng))
    }

    fn one_hot(&self, picks: &[(usize, usize)]) -> Matrix {
        let mut m = Matrix::zeros(picks.len(), self.width());
        for (i, &(col, cat)) in picks.iter().enumerate() {
            m.set(i, self.columns[col].cond_offset + cat, 1.0);
        }
        m
    }

    pub fn sample_training_batch(&self, b: usize, rng: &mut seeding::Rng) -> (Matrix, Vec<(usize, usize)>) {
        let picks: Vec<_> = (0..b).map(|_| self.sample_training(rng)).collect();
        (self.one_hot(&picks), picks)
    }

    /// Conditions drawn with the empirical category frequencies.
    pub fn sample_frequency_batch(&self, b: usize, rng: &mut seeding::Rng) -> Matrix {
        let picks: Vec<_> = (0..b)
            .map(|_| {
                let col = rng.random_range(0..self.columns.len());
                (col, pick(&self.freq_probs[col], rng))
            })
            .collect();
        self.one_hot(&picks)
    }

    pub fn real_row_for(&self, (col, cat): (usize, usize), rng: &mut seeding::Rng) -> usize {
        let rows = &self.columns[col].rows[cat];
        rows[rng.random_range(0..rows.len())]
    }

    /// Cross-entropy between the generator's logits on each conditioned
    /// column and the requested category. Adds `∂/∂logits` (scaled by
    /// `1/b`) into `grad` and returns the summed loss.
    pub fn condition_penalty(&self, logits: &Matrix, picks: &[(usize, usize)], grad: &mut Matrix) -> f64 {
        let b = picks.len() as f64;
        let mut total = 0.0;
        for (i, &(col, cat)) in picks.iter().enumerate() {
            let c = &self.columns[col];
            let block = &logits.row(i)[c.encoded_start..c.encoded_start + c.width()];
            let m = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = block.iter().map(|v| (v - m).exp()).sum();
            total += -(block[cat] - m - z.ln());
            let g = grad.row_mut(i);
            for (k, &v) in block.iter().enumerate() {
                let p = (v - m).exp() / z;
                g[c.encoded_start + k] += (p - if k == cat { 1.0 } else { 0.0 }) / b;
            }
        }
        total
    }
}

/// Conditional GAN over mode-normalized rows. `discrete` lists column
/// indices treated as categorical; with none, the condition vector is empty
/// and this is a plain GAN in the encoded space.
pub fn train_ctgan(rows: &Matrix, discrete: &[usize], cfg: &GanConfig) -> Result<GeneratorModel> {
    cfg.validate()?;
    if let Some(&bad) = discrete.iter().find(|&&j| j >= rows.cols()) {
        return Err(Error::Parameter(format!("discrete column {bad} out of range")));
    }
    let normalizer = ModeNormalizer::fit(rows, discrete, cfg.max_modes, cfg.seed)?;
    let mut rng = seeding::stream(cfg.seed, &[seeding::tag("encode")]);
    let encoded = normalizer.encode(rows, ModeChoice::Sample, &mut rng)?;
    let spans = normalizer.spans();
    let cond = CondSampler::build(&normalizer, rows)?;
    let pair = train_adversarial(&encoded, &spans, cond.as_ref(), cfg)?;
    Ok(GeneratorModel {
        method: GenerativeMethod::Ctgan,
        encoding: Encoding::Modes(normalizer),
        spans,
        cond,
        generator: pair.generator,
        loss_trace: pair.trace,
        config: cfg.clone(),
        d: rows.cols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_with_binary(counts: (usize, usize)) -> Matrix {
        let mut rows = Vec::new();
        for i in 0..counts.0 {
            rows.push([0.0, i as f64 * 0.01]);
        }
        for i in 0..counts.1 {
            rows.push([1.0, 5.0 + i as f64 * 0.01]);
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn no_discrete_columns_means_no_condition() {
        let m = table_with_binary((40, 40));
        let norm = ModeNormalizer::fit(&m, &[], 3, 0).unwrap();
        assert!(CondSampler::build(&norm, &m).unwrap().is_none());
    }

    #[test]
    fn condition_layout() {
        let m = table_with_binary((90, 10));
        let norm = ModeNormalizer::fit(&m, &[0], 3, 0).unwrap();
        let c = CondSampler::build(&norm, &m).unwrap().unwrap();
        assert_eq!(c.width(), 2);
        assert_eq!(c.columns[0].counts, vec![90, 10]);
        assert_eq!(c.columns[0].encoded_start, 0);
        let mut rng = seeding::rng(1);
        for _ in 0..50 {
            let p = c.sample_training(&mut rng);
            let row = c.real_row_for(p, &mut rng);
            assert_eq!(m.get(row, 0), p.1 as f64);
        }
    }

    #[test]
    fn condition_penalty_gradient() {
        let m = table_with_binary((30, 30));
        let norm = ModeNormalizer::fit(&m, &[0], 3, 0).unwrap();
        let c = CondSampler::build(&norm, &m).unwrap().unwrap();
        let w = norm.width();
        let logits = Matrix::from_vec(2, w, (0..2 * w).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let picks = [(0, 1), (0, 0)];
        let mut g = Matrix::zeros(2, w);
        let base = c.condition_penalty(&logits, &picks, &mut g);
        let h = 1e-6;
        for k in 0..2 * w {
            let mut p = logits.clone();
            p.as_mut_slice()[k] += h;
            let mut scratch = Matrix::zeros(2, w);
            let up = c.condition_penalty(&p, &picks, &mut scratch);
            let fd = (up - base) / h / 2.0;
            assert!(
                (fd - g.as_slice()[k]).abs() < 1e-5,
                "coord {k}: {fd} vs {}",
                g.as_slice()[k]
            );
        }
    }
}
