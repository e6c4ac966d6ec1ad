use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::stamped_writer;
use crate::error::{Error, Result};

/// Counts of `log10(x + offset)` over bin edges shared by every class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHistogram {
    pub feature: String,
    pub offset: f64,
    /// `bins + 1` edges in log10 units.
    pub edges: Vec<f64>,
    pub counts: Vec<(u8, Vec<usize>)>,
}

impl LogHistogram {
    /// Per-class counts divided by the class total.
    pub fn normalized(&self) -> Vec<(u8, Vec<f64>)> {
        self.counts
            .iter()
            .map(|(c, v)| {
                let t = v.iter().sum::<usize>().max(1) as f64;
                (*c, v.iter().map(|&x| x as f64 / t).collect())
            })
            .collect()
    }
}

pub fn log_histogram(feature: &str, groups: &[(u8, &[f64])], bins: usize, offset: f64) -> Result<LogHistogram> {
    if bins == 0 {
        return Err(Error::Parameter("histogram needs at least one bin".into()));
    }
    let mut logs = Vec::with_capacity(groups.len());
    for (class, values) in groups {
        let mut l = Vec::with_capacity(values.len());
        for &v in *values {
            let s = v + offset;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!(
                    "feature `{feature}` value {v} with offset {offset} is not positive"
                )));
            }
            l.push(s.log10());
        }
        logs.push((*class, l));
    }
    let all = logs.iter().flat_map(|(_, l)| l.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi <= lo {
        (lo, hi) = (lo - 0.5, lo + 0.5);
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let counts = logs
        .into_iter()
        .map(|(class, l)| {
            let mut c = vec![0; bins];
            for x in l {
                let b = (((x - lo) / width).floor() as usize).min(bins - 1);
                c[b] += 1;
            }
            (class, c)
        })
        .collect();
    Ok(LogHistogram {
        feature: feature.to_string(),
        offset,
        edges,
        counts,
    })
}

/// Columns `class, bin_lo, bin_hi, count` with edges in log10 units.
pub fn write_histogram_csv(h: &LogHistogram, stamp: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = stamped_writer(path, stamp)?;
    w.write_record(["class", "bin_lo", "bin_hi", "count"])?;
    for (class, counts) in &h.counts {
        for (b, c) in counts.iter().enumerate() {
            w.write_record([
                class.to_string(),
                format!("{:.6}", h.edges[b]),
                format!("{:.6}", h.edges[b + 1]),
                c.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_single_class() {
        let h = log_histogram("x", &[(1, &[5.0; 10])], 8, 0.0).unwrap();
        assert_eq!(h.counts[0].1.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn shared_edges_identical_classes() {
        let v = [1.0, 10.0, 100.0, 3.0, 30.0];
        let h = log_histogram("x", &[(0, &v), (2, &v)], 4, 0.0).unwrap();
        assert_eq!(h.counts[0].1, h.counts[1].1);
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.edges[0], 0.0);
        assert_eq!(h.edges[4], 2.0);
    }

    #[test]
    fn non_positive_needs_offset() {
        assert!(matches!(
            log_histogram("x", &[(0, &[0.0, 1.0])], 4, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(log_histogram("x", &[(0, &[0.0, 1.0])], 4, 1.0).is_ok());
    }
}
