//! SMOTE followed by neighbourhood-based cleaning (ENN, Tomek links).

use super::{smote, AugmentedSet, EnnMode, OversampleConfig, TomekPolicy};
use crate::dataset::{Dataset, NORMAL, SLOW};
use crate::error::{Error, Result};
use crate::neighbors::{knn_many, Scope, StandardizedView};

/// SMOTE, then edited-nearest-neighbours over every row (original and
/// synthetic). A row is misclassified when a strict majority of its `k`
/// neighbours carries the other label.
pub fn smote_enn(data: &Dataset, cfg: &OversampleConfig, seed: u64) -> Result<AugmentedSet> {
    let mut aug = smote(data, cfg, seed)?;
    let combined = aug.to_dataset()?;
    let view = StandardizedView::build(combined.features(), cfg.space)?;
    let all: Vec<usize> = (0..combined.n()).collect();
    let neigh = knn_many(&view, &all, cfg.k, Scope::AllRows)?;

    let mut keep = vec![true; combined.n()];
    for (i, nb) in neigh.iter().enumerate() {
        let label = combined.label(i);
        let disagree = nb.iter().filter(|&&j| combined.label(j) != label).count();
        if 2 * disagree > nb.len() {
            keep[i] = false;
            if cfg.enn_mode == EnnMode::WithNeighbours {
                for &j in nb {
                    keep[j] = false;
                }
            }
        }
    }
    for class in [NORMAL, SLOW] {
        let survivors = (0..combined.n())
            .filter(|&i| keep[i] && combined.label(i) == class)
            .count();
        if survivors == 0 {
            return Err(Error::DegenerateEdit(class));
        }
    }
    aug.retain(&keep);
    Ok(aug)
}

/// Cross-class pairs `(a, b)`, `a < b`, that are each other's nearest
/// neighbour (ties to the lower index).
pub fn tomek_links(view: &StandardizedView, labels: &[u8]) -> Result<Vec<(usize, usize)>> {
    let n = view.n();
    if n < 2 {
        return Ok(Vec::new());
    }
    let all: Vec<usize> = (0..n).collect();
    let nn: Vec<usize> = knn_many(view, &all, 1, Scope::AllRows)?
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok((0..n)
        .filter(|&a| nn[a] > a && nn[nn[a]] == a && labels[a] != labels[nn[a]])
        .map(|a| (a, nn[a]))
        .collect())
}

/// SMOTE, then Tomek-link removal repeated until the retained rows contain
/// no link. Each pass re-standardizes the retained rows.
pub fn smote_tomek(data: &Dataset, cfg: &OversampleConfig, seed: u64) -> Result<AugmentedSet> {
    let mut aug = smote(data, cfg, seed)?;
    loop {
        let combined = aug.to_dataset()?;
        if combined.n() < 2 {
            break;
        }
        let view = StandardizedView::build(combined.features(), cfg.space)?;
        let links = tomek_links(&view, combined.labels())?;
        if links.is_empty() {
            break;
        }
        let mut keep = vec![true; combined.n()];
        for (a, b) in links {
            match cfg.tomek_policy {
                TomekPolicy::RemoveMajority => {
                    let maj = if combined.label(a) == NORMAL { a } else { b };
                    keep[maj] = false;
                }
                TomekPolicy::RemoveBoth => {
                    keep[a] = false;
                    keep[b] = false;
                }
            }
        }
        for class in [NORMAL, SLOW] {
            if !(0..combined.n()).any(|i| keep[i] && combined.label(i) == class) {
                return Err(Error::DegenerateEdit(class));
            }
        }
        aug.retain(&keep);
    }
    Ok(aug)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::neighbors::Space;

    fn dataset(points: &[(f64, u8)]) -> Dataset {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.0]).collect();
        Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), points.iter().map(|p| p.1).collect()).unwrap()
    }

    fn raw(k: usize) -> OversampleConfig {
        OversampleConfig {
            k,
            space: Space::Raw,
            ..OversampleConfig::default()
        }
    }

    fn separated() -> Dataset {
        let mut pts: Vec<(f64, u8)> = (0..6).map(|i| (i as f64 * 0.1, SLOW)).collect();
        pts.extend((0..12).map(|i| (50.0 + i as f64 * 0.1, NORMAL)));
        dataset(&pts)
    }

    #[test]
    fn enn_keeps_separated_classes() {
        let data = separated();
        let plain = smote(&data, &raw(3), 5).unwrap();
        let edited = smote_enn(&data, &raw(3), 5).unwrap();
        assert_eq!(edited.len(), plain.len());
        assert_eq!(edited.synthetic, plain.synthetic);
    }

    #[test]
    fn enn_removes_isolated_minority() {
        let mut pts: Vec<(f64, u8)> = (0..6).map(|i| (i as f64 * 0.1, SLOW)).collect();
        pts.extend((0..12).map(|i| (50.0 + i as f64 * 0.1, NORMAL)));
        // Minority row inside the majority cluster.
        pts.push((50.55, SLOW));
        let data = dataset(&pts);
        let edited = smote_enn(&data, &raw(3), 1).unwrap();
        assert!(!edited.kept_base.contains(&18));
    }

    #[test]
    fn with_neighbours_removes_neighbourhood_too() {
        let mut pts: Vec<(f64, u8)> = (0..6).map(|i| (i as f64 * 0.1, SLOW)).collect();
        pts.extend((0..12).map(|i| (50.0 + i as f64 * 0.1, NORMAL)));
        pts.push((50.55, SLOW));
        let data = dataset(&pts);
        let cfg = OversampleConfig {
            enn_mode: EnnMode::WithNeighbours,
            ..raw(3)
        };
        let standard = smote_enn(&data, &raw(3), 1).unwrap();
        let wide = smote_enn(&data, &cfg, 1).unwrap();
        assert!(wide.len() < standard.len());
    }

    #[test]
    fn tomek_without_links_is_identity() {
        let data = separated();
        let plain = smote(&data, &raw(3), 2).unwrap();
        let cleaned = smote_tomek(&data, &raw(3), 2).unwrap();
        assert_eq!(cleaned.len(), plain.len());
    }

    #[test]
    fn forced_link_drops_majority_member() {
        let view = StandardizedView::raw(&Matrix::from_rows(&[[0.0], [0.2], [5.0], [5.1], [9.0]]).unwrap());
        let labels = [SLOW, NORMAL, SLOW, SLOW, NORMAL];
        assert_eq!(tomek_links(&view, &labels).unwrap(), vec![(0, 1)]);

        let mut pts: Vec<(f64, u8)> = (0..6).map(|i| (i as f64 * 0.1, SLOW)).collect();
        pts.extend((0..12).map(|i| (50.0 + i as f64 * 0.1, NORMAL)));
        // Isolated cross-class mutual pair.
        pts.push((200.0, NORMAL));
        pts.push((200.3, SLOW));
        let data = dataset(&pts);
        let cleaned = smote_tomek(&data, &raw(3), 4).unwrap();
        assert!(!cleaned.kept_base.contains(&18));
        assert!(cleaned.kept_base.contains(&19));

        let both = OversampleConfig {
            tomek_policy: TomekPolicy::RemoveBoth,
            ..raw(3)
        };
        let cleaned = smote_tomek(&data, &both, 4).unwrap();
        assert!(!cleaned.kept_base.contains(&18));
        assert!(!cleaned.kept_base.contains(&19));
    }
}
