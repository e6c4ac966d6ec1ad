//! Mode-specific normalization: each continuous column is modelled by a
//! one-dimensional Gaussian mixture and a value `c` is encoded as a scalar
//! offset `α = (c − μ_k) / (4σ_k)` within a chosen mode `k` plus a one-hot
//! mode indicator. Discrete columns are one-hot encoded.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

/// Retained modes must carry at least this mixture weight.
pub const PRUNE_WEIGHT: f64 = 0.005;
pub const DEFAULT_MAX_MODES: usize = 10;
const EM_MAX_ITER: usize = 300;
const EM_REL_TOL: f64 = 1e-10;
/// Columns longer than this are subsampled before fitting.
const FIT_SAMPLE_CAP: usize = 5000;

/// Fitted mixture for one continuous column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeColumn {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Log-likelihood after each EM iteration of the selected fit.
    #[serde(skip)]
    pub log_likelihood: Vec<f64>,
}

impl ModeColumn {
    pub fn modes(&self) -> usize {
        self.means.len()
    }

    fn log_joint(&self, c: f64) -> Vec<f64> {
        (0..self.modes())
            .map(|k| self.weights[k].ln() + log_normal(c, self.means[k], self.stds[k] * self.stds[k]))
            .collect()
    }

    /// Posterior mode probabilities for value `c`.
    pub fn responsibilities(&self, c: f64) -> Vec<f64> {
        let lj = self.log_joint(c);
        let m = lj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = lj.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn argmax_mode(&self, c: f64) -> usize {
        let lj = self.log_joint(c);
        (0..lj.len())
            .max_by(|&a, &b| lj[a].total_cmp(&lj[b]).then(b.cmp(&a)))
            .expect("at least one mode")
    }

    pub fn alpha(&self, c: f64, mode: usize) -> f64 {
        (c - self.means[mode]) / (4.0 * self.stds[mode])
    }

    /// Inverse of [`ModeColumn::alpha`], clamping `α` to `[-1, 1]` first.
    pub fn value(&self, alpha: f64, mode: usize) -> f64 {
        alpha.clamp(-1.0, 1.0) * 4.0 * self.stds[mode] + self.means[mode]
    }
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
}

struct EmFit {
    weights: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
    trace: Vec<f64>,
}

impl EmFit {
    fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| {
                let lj: Vec<f64> = (0..self.means.len())
                    .filter(|&k| self.weights[k] > 0.0)
                    .map(|k| self.weights[k].ln() + log_normal(x, self.means[k], self.vars[k]))
                    .collect();
                log_sum_exp(&lj)
            })
            .sum()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM for a `k`-component 1-D mixture from quantile-spaced initial means.
fn em(xs: &[f64], sorted: &[f64], k: usize, var_floor: f64) -> EmFit {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).max(var_floor);
    let mut fit = EmFit {
        weights: vec![1.0 / k as f64; k],
        means: (0..k)
            .map(|j| sorted[((j as f64 + 0.5) / k as f64 * n as f64) as usize].min(sorted[n - 1]))
            .collect(),
        vars: vec![var / (k * k) as f64; k]
            .into_iter()
            .map(|v| v.max(var_floor))
            .collect(),
        trace: Vec::new(),
    };
    let mut resp = vec![0.0; n * k];
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITER {
        // E-step.
        for (i, &x) in xs.iter().enumerate() {
            let r = &mut resp[i * k..(i + 1) * k];
            let mut m = f64::NEG_INFINITY;
            for (j, rj) in r.iter_mut().enumerate() {
                *rj = if fit.weights[j] > 0.0 {
                    fit.weights[j].ln() + log_normal(x, fit.means[j], fit.vars[j])
                } else {
                    f64::NEG_INFINITY
                };
                m = m.max(*rj);
            }
            let mut s = 0.0;
            for v in r.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            r.iter_mut().for_each(|v| *v /= s);
        }
        // M-step; the variance floor keeps components non-singular.
        for j in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nk <= 1e-12 {
                fit.weights[j] = 0.0;
                continue;
            }
            let mu = (0..n).map(|i| resp[i * k + j] * xs[i]).sum::<f64>() / nk;
            let v = (0..n)
                .map(|i| resp[i * k + j] * (xs[i] - mu) * (xs[i] - mu))
                .sum::<f64>()
                / nk;
            fit.weights[j] = nk / n as f64;
            fit.means[j] = mu;
            fit.vars[j] = v.max(var_floor);
        }
        let ll = fit.log_likelihood(xs);
        fit.trace.push(ll);
        if ll - prev <= EM_REL_TOL * (1.0 + ll.abs()) {
            break;
        }
        prev = ll;
    }
    fit
}

/// Fits a mixture with at most `max_modes` components to one column.
///
/// Candidate fits for every component count up to `max_modes` are compared
/// by BIC; the winner's modes below [`PRUNE_WEIGHT`] are dropped and the
/// remaining weights renormalised.
pub fn fit_mode_column(values: &[f64], max_modes: usize, seed: u64) -> Result<ModeColumn> {
    if values.is_empty() {
        return Err(Error::MixtureFit("empty column".into()));
    }
    if max_modes == 0 {
        return Err(Error::Parameter("max_modes must be >= 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::MixtureFit("non-finite value in column".into()));
    }
    let xs: Vec<f64> = if values.len() > FIT_SAMPLE_CAP {
        let mut rng = seeding::stream(seed, &[seeding::tag("mode-fit")]);
        let mut idx = index::sample(&mut rng, values.len(), FIT_SAMPLE_CAP).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| values[i]).collect()
    } else {
        values.to_vec()
    };
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let spread = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let var_floor = (1e-3 * spread).powi(2).max(1e-12 * mean.abs().max(1.0)).max(1e-24);

    let max_k = max_modes.min(distinct.len());
    let mut best: Option<(f64, EmFit)> = None;
    for k in 1..=max_k {
        let fit = em(&xs, &sorted, k, var_floor);
        let ll = *fit.trace.last().expect("at least one iteration");
        if !ll.is_finite() {
            return Err(Error::MixtureFit(format!("non-finite likelihood with {k} modes")));
        }
        let params = (3 * k - 1) as f64;
        let bic = -2.0 * ll + params * n.ln();
        if best.as_ref().is_none_or(|(b, _)| bic < *b) {
            best = Some((bic, fit));
        }
    }
    let (_, fit) = best.expect("max_k >= 1");

    let keep: Vec<usize> = (0..fit.means.len())
        .filter(|&j| fit.weights[j] >= PRUNE_WEIGHT)
        .collect();
    if keep.is_empty() {
        return Err(Error::MixtureFit("every mode fell below the prune weight".into()));
    }
    let total: f64 = keep.iter().map(|&j| fit.weights[j]).sum();
    Ok(ModeColumn {
        weights: keep.iter().map(|&j| fit.weights[j] / total).collect(),
        means: keep.iter().map(|&j| fit.means[j]).collect(),
        stds: keep.iter().map(|&j| fit.vars[j].sqrt()).collect(),
        log_likelihood: fit.trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnCodec {
    Continuous(ModeColumn),
    Discrete { categories: Vec<f64> },
}

impl ColumnCodec {
    pub fn width(&self) -> usize {
        match self {
            ColumnCodec::Continuous(m) => 1 + m.modes(),
            ColumnCodec::Discrete { categories } => categories.len(),
        }
    }
}

/// Activation applied to a contiguous block of generator outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Tanh,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub kind: SpanKind,
    pub start: usize,
    pub width: usize,
}

/// How a mode-selected encoding picks the mode for each value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeChoice {
    Sample,
    Argmax,
}

/// Per-column codecs for a whole table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeNormalizer {
    pub columns: Vec<ColumnCodec>,
}

impl ModeNormalizer {
    pub fn fit(data: &Matrix, discrete: &[usize], max_modes: usize, seed: u64) -> Result<Self> {
        let columns = (0..data.cols())
            .map(|j| {
                let col = data.column(j);
                if discrete.contains(&j) {
                    let mut categories = col;
                    categories.sort_by(f64::total_cmp);
                    categories.dedup();
                    Ok(ColumnCodec::Discrete { categories })
                } else {
                    fit_mode_column(&col, max_modes, seeding::derive_seed(seed, &[j as u64]))
                        .map(ColumnCodec::Continuous)
                }
            })
            .collect::<Result<_>>()?;
        Ok(ModeNormalizer { columns })
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnCodec::width).sum()
    }

    pub fn spans(&self) -> Vec<Span> {
        let mut spans = Vec::new();
        let mut at = 0;
        for c in &self.columns {
            match c {
                ColumnCodec::Continuous(m) => {
                    spans.push(Span {
                        kind: SpanKind::Tanh,
                        start: at,
                        width: 1,
                    });
                    spans.push(Span {
                        kind: SpanKind::Softmax,
                        start: at + 1,
                        width: m.modes(),
                    });
                }
                ColumnCodec::Discrete { categories } => spans.push(Span {
                    kind: SpanKind::Softmax,
                    start: at,
                    width: categories.len(),
                }),
            }
            at += c.width();
        }
        spans
    }

    /// Encodes one row. Continuous values get their mode sampled from the
    /// posterior (`ModeChoice::Sample`) or forced to the most likely one.
    pub fn encode_row(&self, row: &[f64], choice: ModeChoice, rng: &mut seeding::Rng) -> Result<Vec<f64>> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row has {} values, normalizer has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        let mut out = Vec::with_capacity(self.width());
        for (c, &v) in self.columns.iter().zip(row) {
            match c {
                ColumnCodec::Continuous(m) => {
                    let mode = match choice {
                        ModeChoice::Argmax => m.argmax_mode(v),
                        ModeChoice::Sample => {
                            let p = m.responsibilities(v);
                            let u: f64 = rng.random();
                            let mut acc = 0.0;
                            let mut pick = p.len() - 1;
                            for (k, pk) in p.iter().enumerate() {
                                acc += pk;
                                if u < acc {
                                    pick = k;
                                    break;
                                }
                            }
                            pick
                        }
                    };
                    out.push(m.alpha(v, mode));
                    out.extend((0..m.modes()).map(|k| if k == mode { 1.0 } else { 0.0 }));
                }
                ColumnCodec::Discrete { categories } => {
                    let pos = categories
                        .iter()
                        .position(|&c| c == v)
                        .ok_or_else(|| Error::Encoding(format!("unseen category {v}")))?;
                    out.extend((0..categories.len()).map(|k| if k == pos { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    }

    pub fn encode(&self, data: &Matrix, choice: ModeChoice, rng: &mut seeding::Rng) -> Result<Matrix> {
        let mut out = Matrix::empty(self.width());
        for r in data.iter_rows() {
            out.push_row(&self.encode_row(r, choice, rng)?);
        }
        Ok(out)
    }

    /// Strict inverse of [`ModeNormalizer::encode_row`]; indicator blocks must be one-hot.
    pub fn decode_row(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        self.decode_with(encoded, |block| {
            let ones = block.iter().filter(|&&v| v == 1.0).count();
            let zeros = block.iter().filter(|&&v| v == 0.0).count();
            if ones == 1 && ones + zeros == block.len() {
                Ok(block.iter().position(|&v| v == 1.0).expect("one hot"))
            } else {
                Err(Error::Encoding(format!("indicator block {block:?} is not one-hot")))
            }
        })
    }

    /// Decodes generator output, selecting each indicator block's argmax.
    pub fn decode_soft_row(&self, encoded: &[f64]) -> Result<Vec<f64>> {
        self.decode_with(encoded, |block| {
            Ok((0..block.len())
                .max_by(|&a, &b| block[a].total_cmp(&block[b]).then(b.cmp(&a)))
                .expect("non-empty block"))
        })
    }

    fn decode_with(&self, encoded: &[f64], pick: impl Fn(&[f64]) -> Result<usize>) -> Result<Vec<f64>> {
        if encoded.len() != self.width() {
            return Err(Error::Shape(format!(
                "encoded row has {} values, expected {}",
                encoded.len(),
                self.width()
            )));
        }
        let mut out = Vec::with_capacity(self.columns.len());
        let mut at = 0;
        for c in &self.columns {
            match c {
                ColumnCodec::Continuous(m) => {
                    let mode = pick(&encoded[at + 1..at + 1 + m.modes()])?;
                    out.push(m.value(encoded[at], mode));
                }
                ColumnCodec::Discrete { categories } => {
                    out.push(categories[pick(&encoded[at..at + categories.len()])?]);
                }
            }
            at += c.width();
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn gaussian(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = seeding::rng(seed);
        let d = Normal::new(mean, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn single_gaussian_reduces_to_z_over_four() {
        let xs = gaussian(2000, 3.0, 2.0, 1);
        let m = fit_mode_column(&xs, 10, 0).unwrap();
        assert_eq!(m.modes(), 1);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        for &c in &xs[..20] {
            assert!((m.alpha(c, 0) - (c - mean) / (4.0 * sd)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_column_single_floored_mode() {
        let m = fit_mode_column(&[5.0; 50], 10, 0).unwrap();
        assert_eq!(m.modes(), 1);
        assert!(m.stds[0] > 0.0);
        assert_eq!(m.alpha(5.0, 0), 0.0);
    }

    #[test]
    fn em_log_likelihood_never_decreases() {
        let mut xs = gaussian(600, 0.0, 1.0, 2);
        xs.extend(gaussian(400, 7.0, 2.0, 3));
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for k in 1..=6 {
            let fit = em(&xs, &sorted, k, 1e-12);
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "k={k}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn strict_decode_rejects_soft_indicator() {
        let xs = gaussian(300, 0.0, 1.0, 4);
        let norm = ModeNormalizer {
            columns: vec![ColumnCodec::Continuous(fit_mode_column(&xs, 3, 0).unwrap())],
        };
        let width = norm.width();
        let mut enc = vec![0.1; width];
        enc[0] = 0.2;
        assert!(matches!(norm.decode_row(&enc), Err(Error::Encoding(_))));
        assert!(norm.decode_soft_row(&enc).is_ok());
    }

    #[test]
    fn alpha_is_clamped_on_decode() {
        let m = ModeColumn {
            weights: vec![1.0],
            means: vec![10.0],
            stds: vec![2.0],
            log_likelihood: vec![],
        };
        assert_eq!(m.value(3.0, 0), 18.0);
        assert_eq!(m.value(-7.0, 0), 2.0);
    }

    #[test]
    fn discrete_columns_one_hot() {
        let data = Matrix::from_rows(&[[0.0, 1.5], [1.0, 2.5], [0.0, 1.7], [2.0, 2.0]]).unwrap();
        let norm = ModeNormalizer::fit(&data, &[0], 3, 1).unwrap();
        let mut rng = seeding::rng(0);
        let enc = norm.encode_row(&[2.0, 2.0], ModeChoice::Argmax, &mut rng).unwrap();
        assert_eq!(&enc[..3], &[0.0, 0.0, 1.0]);
        assert_eq!(norm.decode_row(&enc).unwrap()[0], 2.0);
        assert!(norm.encode_row(&[7.0, 2.0], ModeChoice::Argmax, &mut rng).is_err());
    }
}
