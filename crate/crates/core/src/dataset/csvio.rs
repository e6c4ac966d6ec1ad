use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How a flow CSV maps onto a [`Dataset`].
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub label_column: String,
    /// When set, labels are derived as `throughput < threshold` and the label
    /// column becomes optional.
    pub slow_threshold: Option<f64>,
    pub throughput_column: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: "label".into(),
            slow_threshold: None,
            throughput_column: "tput".into(),
        }
    }
}

/// Reads a headered CSV. Every column other than the label column is a feature.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let label_pos = headers.iter().position(|h| *h == opts.label_column);
    if label_pos.is_none() && opts.slow_threshold.is_none() {
        return Err(Error::Schema(format!("missing label column `{}`", opts.label_column)));
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| Some(j) != label_pos).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    let tput_pos = match opts.slow_threshold {
        Some(_) => Some(
            feature_cols
                .iter()
                .position(|&j| headers[j] == opts.throughput_column)
                .ok_or_else(|| Error::Schema(format!("missing throughput column `{}`", opts.throughput_column)))?,
        ),
        None => None,
    };

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let cell = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row: row_no,
                column: headers[j].clone(),
                value: raw.to_string(),
            })
        };
        let start = data.len();
        for &j in &feature_cols {
            data.push(cell(j)?);
        }
        let label = match (opts.slow_threshold, tput_pos) {
            (Some(th), Some(t)) => u8::from(data[start + t] < th),
            _ => {
                let j = label_pos.expect("checked above");
                let v = cell(j)?;
                if v == 0.0 {
                    0
                } else if v == 1.0 {
                    1
                } else {
                    return Err(Error::Parse {
                        row: row_no,
                        column: headers[j].clone(),
                        value: record.get(j).unwrap_or("").to_string(),
                    });
                }
            }
        };
        labels.push(label);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyDataset);
    }
    let names = feature_cols.iter().map(|&j| headers[j].clone()).collect();
    Dataset::new(Matrix::from_vec(rows, feature_cols.len(), data)?, labels, names)
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes features then a `label` column. Values use shortest round-trip
/// formatting so a reload is bit-identical.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_rows(dataset, None, None, path.as_ref())
}

/// Like [`write_csv`] with an extra `origin` column (0 majority, 1 minority,
/// 2 synthetic minority) and an optional leading comment line.
pub fn write_tagged_csv(dataset: &Dataset, origins: &[u8], stamp: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    if origins.len() != dataset.n() {
        return Err(Error::Shape(format!(
            "{} origin tags for {} rows",
            origins.len(),
            dataset.n()
        )));
    }
    write_rows(dataset, Some(origins), stamp, path.as_ref())
}

/// Opens a CSV writer, emitting `# stamp` as the first line when given.
pub(crate) fn stamped_writer(path: &Path, stamp: Option<&str>) -> Result<csv::Writer<File>> {
    let mut file = create(path)?;
    if let Some(stamp) = stamp {
        writeln!(file, "# {stamp}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(file))
}

fn write_rows(dataset: &Dataset, origins: Option<&[u8]>, stamp: Option<&str>, path: &Path) -> Result<()> {
    let mut w = stamped_writer(path, stamp)?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    if origins.is_some() {
        header.push("origin");
    }
    w.write_record(&header)?;
    let mut buf: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..dataset.n() {
        buf.clear();
        buf.extend(dataset.row(i).iter().map(|v| v.to_string()));
        buf.push(dataset.label(i).to_string());
        if let Some(o) = origins {
            buf.push(o[i].to_string());
        }
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_four_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "size,tput,label\n1,2,0\n3,4,1\n5,6,0\n7,8.5,1\n");
        let ds = load_csv(&p, &CsvOptions::default()).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.feature_names(), &["size", "tput"]);
        assert_eq!(ds.labels(), &[0, 1, 0, 1]);
        assert_eq!(ds.row(3), &[7.0, 8.5]);
    }

    #[test]
    fn threshold_derives_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "size,tput\n1,200\n3,400\n");
        let opts = CsvOptions {
            slow_threshold: Some(100.0),
            ..CsvOptions::default()
        };
        let ds = load_csv(&p, &opts).unwrap();
        assert_eq!(ds.labels(), &[0, 0]);
        let opts = CsvOptions {
            slow_threshold: Some(300.0),
            ..CsvOptions::default()
        };
        assert_eq!(load_csv(&p, &opts).unwrap().labels(), &[1, 0]);
    }

    #[test]
    fn error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "nolabel.csv", "size,tput\n1,2\n");
        assert!(matches!(load_csv(&p, &CsvOptions::default()), Err(Error::Schema(_))));
        let p = write(&dir, "bad.csv", "size,label\n1,0\nabc,1\n");
        match load_csv(&p, &CsvOptions::default()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "size");
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = write(&dir, "empty.csv", "size,label\n");
        assert!(matches!(load_csv(&p, &CsvOptions::default()), Err(Error::EmptyDataset)));
    }
}
