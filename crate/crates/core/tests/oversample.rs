mod common;

use common::{
    adasyn_quota_oracle, brute_knn, enn_disagreements, random_dataset, rows_of, segment_residual, tomek_links_by_scan,
    zscore,
};
use proptest::prelude::*;
use slowflow::dataset::{NORMAL, SLOW};
use slowflow::oversample::{
    adasyn, adasyn_quotas, borderline_smote, danger_set, smote, smote_enn, smote_tomek, EnnMode, Origin,
    OversampleConfig, TomekPolicy,
};
use slowflow::Error;

#[test]
fn smote_rows_lie_on_recorded_segments() {
    for seed in 0..10 {
        let ds = random_dataset(seed);
        let cfg = OversampleConfig::default();
        let aug = smote(&ds, &cfg, seed).unwrap();
        assert_eq!(aug.synthetic.rows(), ds.count(NORMAL) - ds.count(SLOW));
        let (residual, neighbours_ok) = segment_residual(&ds, &aug, cfg.k);
        assert!(residual < 1e-9, "seed {seed}: {residual}");
        assert!(neighbours_ok, "seed {seed}");
    }
}

#[test]
fn adasyn_quotas_match_brute_force() {
    for seed in 0..10 {
        let ds = random_dataset(100 + seed);
        for beta in [1.0, 0.5] {
            let cfg = OversampleConfig {
                beta,
                ..OversampleConfig::default()
            };
            let q = adasyn_quotas(&ds, &cfg).unwrap();
            let g = (beta * (ds.count(NORMAL) - ds.count(SLOW)) as f64).round() as usize;
            assert_eq!(q.iter().sum::<usize>(), g);
            assert_eq!(q, adasyn_quota_oracle(&ds, cfg.k, beta));
            let aug = adasyn(&ds, &cfg, seed).unwrap();
            assert_eq!(aug.synthetic.rows(), g);
            for (pos, &row) in rows_of(&ds, SLOW).iter().enumerate() {
                let made = aug.provenance.iter().filter(|p| p.unwrap().parent == row).count();
                assert_eq!(made, q[pos]);
            }
        }
    }
}

#[test]
fn tomek_cleaning_leaves_no_links() {
    for seed in 0..10 {
        let ds = random_dataset(200 + seed);
        for policy in [TomekPolicy::RemoveMajority, TomekPolicy::RemoveBoth] {
            let cfg = OversampleConfig {
                tomek_policy: policy,
                ..OversampleConfig::default()
            };
            let out = smote_tomek(&ds, &cfg, seed).unwrap().to_dataset().unwrap();
            assert_eq!(tomek_links_by_scan(&out), 0, "seed {seed} {policy:?}");
        }
    }
}

#[test]
fn enn_removes_exactly_the_misclassified_rows() {
    for seed in 0..10 {
        let ds = random_dataset(300 + seed);
        assert_eq!(
            enn_disagreements(&ds, &OversampleConfig::default(), seed),
            0,
            "seed {seed}"
        );
    }
}

#[test]
fn neighbourhood_enn_removes_at_least_as_much() {
    for seed in 0..5 {
        let ds = random_dataset(350 + seed);
        let standard = smote_enn(&ds, &OversampleConfig::default(), seed).unwrap();
        let wide = OversampleConfig {
            enn_mode: EnnMode::WithNeighbours,
            ..OversampleConfig::default()
        };
        match smote_enn(&ds, &wide, seed) {
            Ok(l) => assert!(l.len() <= standard.len()),
            Err(Error::DegenerateEdit(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn borderline_parents_come_from_danger() {
    for seed in 0..10 {
        let ds = random_dataset(400 + seed);
        let cfg = OversampleConfig::default();
        let z = zscore(ds.features());
        let all: Vec<usize> = (0..ds.n()).collect();
        let oracle: Vec<usize> = rows_of(&ds, SLOW)
            .into_iter()
            .filter(|&i| {
                let m = brute_knn(&z, i, cfg.k, &all)
                    .iter()
                    .filter(|&&j| ds.label(j) == NORMAL)
                    .count();
                2 * m >= cfg.k && m < cfg.k
            })
            .collect();
        assert_eq!(danger_set(&ds, &cfg).unwrap(), oracle);
        match borderline_smote(&ds, &cfg, seed) {
            Ok(aug) => {
                for p in &aug.provenance {
                    assert!(oracle.contains(&p.unwrap().parent));
                }
            }
            Err(Error::NoBorderline) => assert!(oracle.is_empty()),
            Err(e) => panic!("{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn smote_balances_and_tags(seed in 0u64..10_000) {
        let ds = random_dataset(seed);
        let aug = smote(&ds, &OversampleConfig::default(), seed).unwrap();
        let out = aug.to_dataset().unwrap();
        prop_assert_eq!(out.count(SLOW), out.count(NORMAL));
        let origins = aug.origins();
        prop_assert_eq!(origins.len(), out.n());
        for (i, &o) in origins.iter().enumerate() {
            let expected = if i >= ds.n() {
                Origin::Synthetic
            } else if ds.label(i) == SLOW {
                Origin::Minority
            } else {
                Origin::Majority
            };
            prop_assert_eq!(o, expected as u8);
        }
    }

    #[test]
    fn smote_is_deterministic(seed in 0u64..10_000) {
        let ds = random_dataset(seed);
        let cfg = OversampleConfig::default();
        let a = smote(&ds, &cfg, seed).unwrap();
        let b = smote(&ds, &cfg, seed).unwrap();
        prop_assert_eq!(a.synthetic, b.synthetic);
    }

    #[test]
    fn cleaning_only_removes_rows(seed in 0u64..10_000) {
        let ds = random_dataset(seed);
        let cfg = OversampleConfig::default();
        let full = smote(&ds, &cfg, seed).unwrap().len();
        let enn = smote_enn(&ds, &cfg, seed).unwrap();
        let tomek = smote_tomek(&ds, &cfg, seed).unwrap();
        prop_assert!(enn.len() <= full);
        prop_assert!(tomek.len() <= full);
        let t = tomek.to_dataset().unwrap();
        prop_assert_eq!(t.count(SLOW), ds.count(NORMAL));
    }
}
