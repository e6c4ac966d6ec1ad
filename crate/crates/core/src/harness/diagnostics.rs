use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::config::DiagnosticsSettings;
use crate::error::{Error, Result};
use crate::evaluate::{ks_report, log_histogram, tsne, EmbeddingResult, KsRow, LogHistogram, TsneConfig};
use crate::matrix::Matrix;
use crate::neighbors::standardize_matrix;
use crate::oversample::Origin;
use crate::seeding;

/// Real-versus-synthetic comparison for one augmentation method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub ks: Vec<KsRow>,
    pub histograms: Vec<LogHistogram>,
    pub embedding: Option<EmbeddingResult>,
    pub embedding_note: Option<String>,
}

/// Histogram offset making every value of a feature positive.
fn positive_offset(values: impl Iterator<Item = f64>) -> f64 {
    let min = values.fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        0.0
    } else {
        1.0 - min
    }
}

/// KS scores, per-feature log histograms (class 0 majority, 1 real minority,
/// 2 synthetic) and a t-SNE embedding of an evenly subsampled mix.
pub fn diagnose(
    real: &Matrix,
    synthetic: &Matrix,
    majority: Option<&Matrix>,
    feature_names: &[String],
    method: &str,
    settings: &DiagnosticsSettings,
    seed: u64,
) -> Result<Diagnostics> {
    if synthetic.rows() == 0 {
        return Err(Error::Parameter(format!(
            "{method} produced no synthetic rows to diagnose"
        )));
    }
    let ks = ks_report(real, synthetic, feature_names)?;
    let mut groups: Vec<(u8, &Matrix)> = Vec::new();
    if let Some(m) = majority {
        groups.push((Origin::Majority as u8, m));
    }
    groups.push((Origin::Minority as u8, real));
    groups.push((Origin::Synthetic as u8, synthetic));

    let histograms = feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let cols: Vec<(u8, Vec<f64>)> = groups.iter().map(|(c, m)| (*c, m.column(j))).collect();
            let offset = positive_offset(cols.iter().flat_map(|(_, v)| v.iter().copied()));
            let refs: Vec<(u8, &[f64])> = cols.iter().map(|(c, v)| (*c, v.as_slice())).collect();
            log_histogram(name, &refs, settings.bins, offset)
        })
        .collect::<Result<Vec<_>>>()?;

    let (embedding, embedding_note) = if settings.tsne.enabled {
        match embed(&groups, settings, seed)? {
            Ok(e) => (Some(e), None),
            Err(note) => {
                log::warn!("t-SNE skipped: {note}");
                (None, Some(note))
            }
        }
    } else {
        (None, None)
    };
    Ok(Diagnostics {
        method: method.to_string(),
        ks,
        histograms,
        embedding,
        embedding_note,
    })
}

/// Outer error: t-SNE failed. Inner error: skipped, with a reason.
fn embed(
    groups: &[(u8, &Matrix)],
    settings: &DiagnosticsSettings,
    seed: u64,
) -> Result<Result<EmbeddingResult, String>> {
    let per_class = (settings.tsne.max_points / groups.len()).max(1);
    let mut rng = seeding::stream(seed, &[seeding::tag("tsne-subsample")]);
    let d = groups[0].1.cols();
    let mut rows = Matrix::empty(d);
    let mut tags = Vec::new();
    for (class, m) in groups {
        let take = per_class.min(m.rows());
        let mut idx = index::sample(&mut rng, m.rows(), take).into_vec();
        idx.sort_unstable();
        for i in idx {
            // Signed log keeps heavy-tailed features from dominating distances.
            let r: Vec<f64> = m.row(i).iter().map(|v| v.signum() * v.abs().ln_1p()).collect();
            rows.push_row(&r);
            tags.push(*class);
        }
    }
    let n = rows.rows();
    let max_perp = (n as f64 - 1.0) / 3.0;
    if max_perp < 5.0 {
        return Ok(Err(format!("{n} rows are too few for perplexity 5")));
    }
    let view = standardize_matrix(&rows)?;
    let cfg = TsneConfig {
        perplexity: settings.tsne.perplexity.min(max_perp),
        iterations: settings.tsne.iterations,
        seed,
        ..TsneConfig::default()
    };
    tsne(view.scaled(), &tags, &cfg).map(Ok)
}
