use rand::Rng as _;

use super::{interpolate, require_minority, AugmentedSet, OversampleConfig, Provenance};
use crate::dataset::{partition, Dataset};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::neighbors::{knn_many, Scope, StandardizedView};
use crate::seeding;

/// Plain SMOTE: random minority parent, random one of its k minority
/// neighbours, one uniform δ per synthetic row.
pub fn smote(data: &Dataset, cfg: &OversampleConfig, seed: u64) -> Result<AugmentedSet> {
    let part = partition(data)?;
    require_minority(part.n_min(), cfg.k)?;
    let m = cfg.synthetic_count(part.n_min(), part.n_maj())?;
    let view = StandardizedView::build(data.features(), cfg.space)?;
    let neigh = knn_many(&view, &part.minority_idx, cfg.k, Scope::Rows(&part.minority_idx))?;

    let mut rng = seeding::stream(seed, &[seeding::tag("smote")]);
    let parents: Vec<usize> = (0..m).map(|_| rng.random_range(0..part.n_min())).collect();
    let (synthetic, provenance) = interpolate_from(data, &part.minority_idx, &neigh, &parents, &mut rng);
    AugmentedSet::new(data.clone(), synthetic, provenance)
}

/// Generates one row per entry of `parents` (positions into `pool`), each
/// toward a uniformly chosen neighbour from `neigh[parent]`.
pub(crate) fn interpolate_from(
    data: &Dataset,
    pool: &[usize],
    neigh: &[Vec<usize>],
    parents: &[usize],
    rng: &mut seeding::Rng,
) -> (Matrix, Vec<Option<Provenance>>) {
    let mut synthetic = Matrix::empty(data.d());
    let mut provenance = Vec::with_capacity(parents.len());
    for &p in parents {
        let parent = pool[p];
        let candidates = &neigh[p];
        let neighbor = candidates[rng.random_range(0..candidates.len())];
        let delta: f64 = rng.random();
        synthetic.push_row(&interpolate(data.row(parent), data.row(neighbor), delta));
        provenance.push(Some(Provenance {
            parent,
            neighbor,
            delta,
        }));
    }
    (synthetic, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SLOW;
    use crate::error::Error;
    use crate::oversample::Origin;

    fn blob() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64;
            rows.push(vec![t.sin() * 2.0, t.cos() * 3.0]);
            labels.push(SLOW);
        }
        for i in 0..60 {
            let t = i as f64;
            rows.push(vec![10.0 + t.sin(), 10.0 + (t * 1.3).cos()]);
            labels.push(0);
        }
        Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn delta_endpoints() {
        let a = [1.0, -2.0, 5.0];
        let b = [4.0, 2.0, -1.0];
        assert_eq!(interpolate(&a, &b, 0.0), a.to_vec());
        assert_eq!(interpolate(&a, &b, 1.0), b.to_vec());
    }

    #[test]
    fn balances_and_tags() {
        let data = blob();
        let aug = smote(&data, &OversampleConfig::default(), 1).unwrap();
        assert_eq!(aug.synthetic.rows(), 40);
        let out = aug.to_dataset().unwrap();
        assert_eq!(out.count(SLOW), 60);
        let tags = aug.origins();
        assert_eq!(tags.iter().filter(|&&t| t == Origin::Synthetic as u8).count(), 40);
        assert_eq!(tags.iter().filter(|&&t| t == Origin::Minority as u8).count(), 20);
    }

    #[test]
    fn rows_lie_on_recorded_segments() {
        let data = blob();
        let aug = smote(&data, &OversampleConfig::default(), 4).unwrap();
        for (row, prov) in aug.synthetic.iter_rows().zip(&aug.provenance) {
            let p = prov.unwrap();
            assert_eq!(data.label(p.parent), SLOW);
            assert_eq!(data.label(p.neighbor), SLOW);
            assert!((0.0..=1.0).contains(&p.delta));
            let expect = interpolate(data.row(p.parent), data.row(p.neighbor), p.delta);
            for (a, b) in row.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn insufficient_minority() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let data = Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), vec![1, 1, 0, 0]).unwrap();
        let err = smote(&data, &OversampleConfig::with_k(5), 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientMinority { required: 6, found: 2 }));
    }

    #[test]
    fn target_must_exceed_minority() {
        let cfg = OversampleConfig {
            target: Some(20),
            ..OversampleConfig::default()
        };
        assert!(matches!(smote(&blob(), &cfg, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn deterministic() {
        let a = smote(&blob(), &OversampleConfig::default(), 9).unwrap();
        let b = smote(&blob(), &OversampleConfig::default(), 9).unwrap();
        assert_eq!(a.synthetic, b.synthetic);
    }
}
