use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::stamped_writer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Largest gap between the two empirical CDFs.
    pub statistic: f64,
    /// `1 − statistic`; 1 means indistinguishable samples.
    pub score: f64,
}

fn sorted(values: &[f64], which: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Parameter(format!("KS sample {which} is empty")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain(format!("KS sample {which} contains NaN")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic evaluated at every pooled
/// sample point, stepping over tied values together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = sorted(a, "a")?;
    let b = sorted(b, "b")?;
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let (mut i, mut j) = (0, 0);
    // Gap numerator over na * nb, kept integral so D is the rounded rational.
    let mut gap: u128 = 0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        gap = gap.max((i as u128 * nb).abs_diff(j as u128 * na));
    }
    let d = gap as f64 / (na * nb) as f64;
    Ok(KsResult {
        statistic: d,
        score: 1.0 - d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub feature: String,
    pub statistic: f64,
    pub score: f64,
}

/// Per-feature KS comparison, sorted by score descending (stable in
/// feature order).
pub fn ks_report(real: &Matrix, synthetic: &Matrix, feature_names: &[String]) -> Result<Vec<KsRow>> {
    if real.cols() != synthetic.cols() || real.cols() != feature_names.len() {
        return Err(Error::Schema(format!(
            "KS report: real has {} columns, synthetic {}, {} names",
            real.cols(),
            synthetic.cols(),
            feature_names.len()
        )));
    }
    let mut rows = feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let r = ks_two_sample(&real.column(j), &synthetic.column(j))?;
            Ok(KsRow {
                feature: name.clone(),
                statistic: r.statistic,
                score: r.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| y.score.total_cmp(&x.score));
    Ok(rows)
}

pub fn write_ks_csv(rows: &[KsRow], stamp: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = stamped_writer(path, stamp)?;
    w.write_record(["feature", "ks_score", "ks_statistic"])?;
    for r in rows {
        w.write_record([
            r.feature.clone(),
            format!("{:.3}", r.score),
            format!("{:.6}", r.statistic),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let r = ks_two_sample(&[3.0, 1.0, 2.0, 2.0], &[2.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn disjoint() {
        let r = ks_two_sample(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn half_overlap() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
    }

    #[test]
    fn empty_rejected() {
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn report_order_and_schema() {
        let real = Matrix::from_rows(&[[1.0, 0.0], [2.0, 1.0], [3.0, 2.0]]).unwrap();
        let syn = Matrix::from_rows(&[[1.0, 100.0], [2.0, 101.0], [3.0, 102.0]]).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let rows = ks_report(&real, &syn, &names).unwrap();
        assert_eq!(rows[0].feature, "a");
        assert_eq!(rows[1].score, 0.0);
        assert!(matches!(ks_report(&real, &syn, &names[..1]), Err(Error::Schema(_))));
    }
}
