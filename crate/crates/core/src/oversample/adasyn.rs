use std::cmp::Ordering;

use super::smote::interpolate_from;
use super::{require_minority, AugmentedSet, OversampleConfig};
use crate::dataset::{partition, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{knn_many, majority_count_in_knn, Scope, StandardizedView};
use crate::seeding;

/// Per-minority-row synthetic quotas `g_i`, aligned with the partition's
/// minority indices.
///
/// `r_i = Δ_i / k` is normalised to `r̂_i`; the total `G = round(β·(|C_maj| − |C_min|))`
/// is split by largest remainder so that `Σ g_i = G` exactly. Remainder ties
/// go to the larger `r̂`, then to the lower row.
pub fn adasyn_quotas(data: &Dataset, cfg: &OversampleConfig) -> Result<Vec<usize>> {
    let part = partition(data)?;
    require_minority(part.n_min(), cfg.k)?;
    let view = StandardizedView::build(data.features(), cfg.space)?;
    quotas_in_view(data, &view, &part.minority_idx, part.n_maj(), cfg)
}

fn quotas_in_view(
    data: &Dataset,
    view: &StandardizedView,
    minority: &[usize],
    n_maj: usize,
    cfg: &OversampleConfig,
) -> Result<Vec<usize>> {
    if !(cfg.beta.is_finite() && cfg.beta > 0.0) {
        return Err(Error::Parameter(format!("beta {} must be > 0", cfg.beta)));
    }
    let gap = n_maj.saturating_sub(minority.len());
    if gap == 0 {
        return Err(Error::Parameter(
            "minority is not smaller than majority; nothing to generate".into(),
        ));
    }
    let total = (cfg.beta * gap as f64).round() as usize;

    let ratios: Vec<f64> = minority
        .iter()
        .map(|&i| majority_count_in_knn(view, i, cfg.k, data.labels()).map(|d| d as f64 / cfg.k as f64))
        .collect::<Result<_>>()?;
    let sum: f64 = ratios.iter().sum();
    if sum == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    let shares: Vec<f64> = ratios.iter().map(|r| r / sum * total as f64).collect();
    let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let residue = total - quotas.iter().sum::<usize>();

    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa)
            .unwrap_or(Ordering::Equal)
            .then(ratios[b].total_cmp(&ratios[a]))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(residue) {
        quotas[i] += 1;
    }
    Ok(quotas)
}

/// ADASYN: SMOTE interpolation with each minority row generating its
/// density-weighted quota.
pub fn adasyn(data: &Dataset, cfg: &OversampleConfig, seed: u64) -> Result<AugmentedSet> {
    let part = partition(data)?;
    require_minority(part.n_min(), cfg.k)?;
    let view = StandardizedView::build(data.features(), cfg.space)?;
    let quotas = quotas_in_view(data, &view, &part.minority_idx, part.n_maj(), cfg)?;
    let neigh = knn_many(&view, &part.minority_idx, cfg.k, Scope::Rows(&part.minority_idx))?;

    let parents: Vec<usize> = quotas
        .iter()
        .enumerate()
        .flat_map(|(p, &g)| std::iter::repeat_n(p, g))
        .collect();
    let mut rng = seeding::stream(seed, &[seeding::tag("adasyn")]);
    let (synthetic, provenance) = interpolate_from(data, &part.minority_idx, &neigh, &parents, &mut rng);
    AugmentedSet::new(data.clone(), synthetic, provenance)
}
