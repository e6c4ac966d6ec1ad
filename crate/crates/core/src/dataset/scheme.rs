use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{partition, Dataset};
use crate::error::{Error, Result};
use crate::seeding;

/// How many rows of one class a scheme draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRule {
    KeepAll,
    KeepFraction(f64),
    Count(usize),
    /// Majority only: a multiple of the minority rows selected.
    Times(f64),
}

/// A stratified training/test set construction rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingScheme {
    pub name: String,
    pub minority: CountRule,
    pub majority: CountRule,
    /// Minority:majority ratio the scheme is meant to produce.
    pub ir: f64,
}

impl SamplingScheme {
    /// Random sampling that keeps the natural 1:1000 imbalance.
    pub fn train1(minority_count: usize) -> Self {
        SamplingScheme {
            name: "train1".into(),
            minority: CountRule::Count(minority_count),
            majority: CountRule::Times(1000.0),
            ir: 1.0 / 1000.0,
        }
    }

    /// Every slow transfer plus the same number of normal ones.
    pub fn train2() -> Self {
        SamplingScheme {
            name: "train2".into(),
            minority: CountRule::KeepAll,
            majority: CountRule::Times(1.0),
            ir: 1.0,
        }
    }

    /// Half of the slow transfers plus twice as many normal ones.
    pub fn train3() -> Self {
        SamplingScheme {
            name: "train3".into(),
            minority: CountRule::KeepFraction(0.5),
            majority: CountRule::Times(2.0),
            ir: 0.5,
        }
    }

    /// Every slow transfer plus twice as many normal ones.
    pub fn train4() -> Self {
        SamplingScheme {
            name: "train4".into(),
            minority: CountRule::KeepAll,
            majority: CountRule::Times(2.0),
            ir: 0.5,
        }
    }

    /// 1,000 slow and 10,000 normal transfers.
    pub fn train5() -> Self {
        SamplingScheme {
            name: "train5".into(),
            minority: CountRule::Count(1000),
            majority: CountRule::Count(10_000),
            ir: 0.1,
        }
    }

    /// Balanced held-out set built like `train2`.
    pub fn test2() -> Self {
        SamplingScheme {
            name: "test2".into(),
            ..SamplingScheme::train2()
        }
    }

    /// `minority_count` slow rows and `minority_count / ir` normal rows.
    pub fn with_ir(name: impl Into<String>, minority_count: usize, ir: f64) -> Self {
        SamplingScheme {
            name: name.into(),
            minority: CountRule::Count(minority_count),
            majority: CountRule::Times(1.0 / ir),
            ir,
        }
    }

    /// Looks up one of the named Table-style schemes.
    pub fn named(name: &str) -> Option<Self> {
        Some(match name {
            "train1" => SamplingScheme::train1(30),
            "train2" => SamplingScheme::train2(),
            "train3" => SamplingScheme::train3(),
            "train4" => SamplingScheme::train4(),
            "train5" => SamplingScheme::train5(),
            "test2" => SamplingScheme::test2(),
            _ => return None,
        })
    }

    /// Resolves the (minority, majority) row counts against available rows.
    pub fn target_counts(&self, available_min: usize, available_maj: usize) -> Result<(usize, usize)> {
        let n_min = match self.minority {
            CountRule::KeepAll => available_min,
            CountRule::KeepFraction(f) => {
                check_fraction(f)?;
                (f * available_min as f64).round() as usize
            }
            CountRule::Count(m) => m,
            CountRule::Times(_) => {
                return Err(Error::Parameter(
                    "`times` is only meaningful for the majority class".into(),
                ))
            }
        };
        if n_min > available_min {
            return Err(Error::InsufficientRows {
                class: "minority",
                requested: n_min,
                available: available_min,
            });
        }
        let n_maj = match self.majority {
            CountRule::KeepAll => available_maj,
            CountRule::KeepFraction(f) => {
                check_fraction(f)?;
                (f * available_maj as f64).round() as usize
            }
            CountRule::Count(m) => m,
            CountRule::Times(t) => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Parameter(format!("majority multiple {t} must be > 0")));
                }
                (t * n_min as f64).round() as usize
            }
        };
        if n_maj > available_maj {
            return Err(Error::InsufficientRows {
                class: "majority",
                requested: n_maj,
                available: available_maj,
            });
        }
        Ok((n_min, n_maj))
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("fraction {f} outside [0, 1]")))
    }
}

/// Draws rows without replacement per class; output keeps source row order.
pub fn apply_scheme(dataset: &Dataset, scheme: &SamplingScheme, seed: u64) -> Result<Dataset> {
    let part = partition(dataset)?;
    let (n_min, n_maj) = scheme.target_counts(part.n_min(), part.n_maj())?;
    let mut rng = seeding::stream(seed, &[seeding::tag(&scheme.name)]);
    let mut chosen: Vec<usize> = index::sample(&mut rng, part.n_min(), n_min)
        .into_iter()
        .map(|i| part.minority_idx[i])
        .collect();
    chosen.extend(
        index::sample(&mut rng, part.n_maj(), n_maj)
            .into_iter()
            .map(|i| part.majority_idx[i]),
    );
    chosen.sort_unstable();
    dataset.select(&chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{NORMAL, SLOW};
    use crate::matrix::Matrix;

    fn source(n_min: usize, n_maj: usize) -> Dataset {
        let n = n_min + n_maj;
        let labels = (0..n).map(|i| u8::from(i < n_min)).collect();
        let m = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::unnamed(m, labels).unwrap()
    }

    #[test]
    fn train2_balances() {
        let src = source(3000, 100_000);
        let out = apply_scheme(&src, &SamplingScheme::train2(), 1).unwrap();
        assert_eq!(out.count(SLOW), 3000);
        assert_eq!(out.count(NORMAL), 3000);
    }

    #[test]
    fn train3_keeps_half() {
        let src = source(3000, 100_000);
        let out = apply_scheme(&src, &SamplingScheme::train3(), 1).unwrap();
        assert_eq!((out.count(SLOW), out.count(NORMAL)), (1500, 3000));
    }

    #[test]
    fn all_table_schemes_hit_targets() {
        let src = source(3000, 40_000);
        for (scheme, expect) in [
            (SamplingScheme::train1(30), (30, 30_000)),
            (SamplingScheme::train2(), (3000, 3000)),
            (SamplingScheme::train3(), (1500, 3000)),
            (SamplingScheme::train4(), (3000, 6000)),
            (SamplingScheme::train5(), (1000, 10_000)),
            (SamplingScheme::test2(), (3000, 3000)),
        ] {
            let out = apply_scheme(&src, &scheme, 9).unwrap();
            assert_eq!((out.count(SLOW), out.count(NORMAL)), expect, "{}", scheme.name);
            let ir = partition(&out).unwrap().ir;
            assert!((ir - scheme.ir).abs() <= 1.0 / expect.1 as f64, "{}", scheme.name);
        }
    }

    #[test]
    fn infeasible_request() {
        let src = source(3000, 100_000);
        let scheme = SamplingScheme {
            name: "greedy".into(),
            minority: CountRule::Count(5000),
            majority: CountRule::Times(1.0),
            ir: 1.0,
        };
        assert!(matches!(
            apply_scheme(&src, &scheme, 0),
            Err(Error::InsufficientRows {
                class: "minority",
                requested: 5000,
                available: 3000
            })
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_without_replacement() {
        let src = source(500, 5000);
        let a = apply_scheme(&src, &SamplingScheme::train4(), 42).unwrap();
        let b = apply_scheme(&src, &SamplingScheme::train4(), 42).unwrap();
        assert_eq!(a, b);
        let col = a.column(0);
        let mut dedup = col.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), col.len());
        let c = apply_scheme(&src, &SamplingScheme::train4(), 43).unwrap();
        assert_ne!(a, c);
    }
}
