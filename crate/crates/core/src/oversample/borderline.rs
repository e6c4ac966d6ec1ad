use rand::Rng as _;

use super::smote::interpolate_from;
use super::{require_minority, AugmentedSet, OversampleConfig};
use crate::dataset::{partition, Dataset, NORMAL};
use crate::error::{Error, Result};
use crate::neighbors::{knn_many, Scope, StandardizedView};
use crate::seeding;

/// Minority rows whose all-rows neighbourhood holds `m'` majority rows with
/// `k/2 <= m' < k`. Rows with `m' = k` are noise and excluded.
pub fn danger_set(data: &Dataset, cfg: &OversampleConfig) -> Result<Vec<usize>> {
    let part = partition(data)?;
    require_minority(part.n_min(), cfg.k)?;
    let view = StandardizedView::build(data.features(), cfg.space)?;
    danger_in_view(data, &view, &part.minority_idx, cfg.k)
}

fn danger_in_view(data: &Dataset, view: &StandardizedView, minority: &[usize], k: usize) -> Result<Vec<usize>> {
    let neigh = knn_many(view, minority, k, Scope::AllRows)?;
    Ok(minority
        .iter()
        .zip(neigh)
        .filter(|(_, nb)| {
            let majority = nb.iter().filter(|&&j| data.label(j) == NORMAL).count();
            2 * majority >= k && majority < k
        })
        .map(|(&i, _)| i)
        .collect())
}

/// Borderline-SMOTE (variant 1): SMOTE with parents restricted to the
/// DANGER set, interpolating toward minority neighbours.
pub fn borderline_smote(data: &Dataset, cfg: &OversampleConfig, seed: u64) -> Result<AugmentedSet> {
    let part = partition(data)?;
    require_minority(part.n_min(), cfg.k)?;
    let m = cfg.synthetic_count(part.n_min(), part.n_maj())?;
    let view = StandardizedView::build(data.features(), cfg.space)?;
    let danger = danger_in_view(data, &view, &part.minority_idx, cfg.k)?;
    if danger.is_empty() {
        return Err(Error::NoBorderline);
    }
    let neigh = knn_many(&view, &danger, cfg.k, Scope::Rows(&part.minority_idx))?;

    let mut rng = seeding::stream(seed, &[seeding::tag("borderline")]);
    let parents: Vec<usize> = (0..m).map(|_| rng.random_range(0..danger.len())).collect();
    let (synthetic, provenance) = interpolate_from(data, &danger, &neigh, &parents, &mut rng);
    AugmentedSet::new(data.clone(), synthetic, provenance)
}
