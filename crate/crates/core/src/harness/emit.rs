use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::diagnostics::Diagnostics;
use super::run::{ExperimentReport, RowKind};
use super::svg::{line_chart, scatter, Series};
use crate::dataset::stamped_writer;
use crate::error::{Error, Result};
use crate::evaluate::{write_embedding_csv, write_histogram_csv, write_ks_csv};
use crate::generative::write_loss_trace;

/// `1:N` when the ratio is a unit fraction, otherwise the decimal value.
pub fn ir_label(ir: f64) -> String {
    let inv = 1.0 / ir;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("1:{}", inv.round() as u64)
    } else {
        format!("{ir:.4}")
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One table row: label, IR label, F1 per configured classifier.
pub struct F1Row {
    pub row: String,
    pub ir: String,
    pub values: Vec<Option<f64>>,
}

/// Baseline scheme rows first, then method rows by IR, in config order.
pub fn f1_rows(report: &ExperimentReport) -> Vec<F1Row> {
    let classifiers = &report.config.classifiers;
    let mut keys: Vec<(RowKind, String, f64)> = Vec::new();
    for c in &report.cells {
        let k = (c.row_kind, c.row.clone(), c.ir);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.sort_by_key(|k| k.0 == RowKind::Method);
    keys.into_iter()
        .map(|(kind, row, ir)| F1Row {
            values: classifiers
                .iter()
                .map(|&cl| {
                    report
                        .cells
                        .iter()
                        .find(|c| c.row_kind == kind && c.row == row && c.ir == ir && c.classifier == cl)
                        .and_then(|c| c.f1)
                })
                .collect(),
            row,
            ir: ir_label(ir),
        })
        .collect()
}

pub fn emit_f1_table(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let stamp = report.stamp.line();
    let rows = f1_rows(report);
    let mut header = vec!["row".to_string(), "ir".to_string()];
    header.extend(report.config.classifiers.iter().map(|c| c.name().to_string()));
    let fmt = |v: &Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));

    let csv_path = dir.join("f1_table.csv");
    let mut w = stamped_writer(&csv_path, Some(&stamp))?;
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![r.row.clone(), r.ir.clone()];
        rec.extend(r.values.iter().map(fmt));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let mut table: Vec<Vec<String>> = vec![header];
    for r in &rows {
        let mut rec = vec![r.row.clone(), r.ir.clone()];
        rec.extend(r.values.iter().map(|v| v.map_or("-".into(), |x| format!("{x:.3}"))));
        table.push(rec);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut text = format!("# {stamp}\n");
    for r in &table {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if j < 2 {
                    format!("{s:<w$}", w = widths[j])
                } else {
                    format!("{s:>w$}", w = widths[j])
                }
            })
            .collect();
        text.push_str(cells.join("  ").trim_end());
        text.push('\n');
    }
    let txt_path = dir.join("f1_table.txt");
    write_text(&txt_path, &text)?;
    Ok(vec![csv_path, txt_path])
}

/// `ir_sweep.csv` plus, with at least two IRs, one SVG per classifier with
/// one polyline per method.
pub fn emit_ir_sweep(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let stamp = report.stamp.line();
    let cfg = &report.config;
    let csv_path = dir.join("ir_sweep.csv");
    let mut w = stamped_writer(&csv_path, Some(&stamp))?;
    w.write_record(["method", "classifier", "ir", "f1"])?;
    for &m in &cfg.methods {
        for &cl in &cfg.classifiers {
            for &ir in &cfg.irs {
                let f = report
                    .cells
                    .iter()
                    .find(|c| c.row_kind == RowKind::Method && c.row == m.name() && c.classifier == cl && c.ir == ir)
                    .and_then(|c| c.f1);
                w.write_record([
                    m.name().to_string(),
                    cl.name().to_string(),
                    format!("{ir}"),
                    f.map_or(String::new(), |x| format!("{x:.3}")),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let mut out = vec![csv_path];

    let mut irs = cfg.irs.clone();
    irs.sort_by(|a, b| b.total_cmp(a));
    irs.dedup();
    if irs.len() < 2 {
        log::info!("single imbalance ratio configured; IR sweep chart skipped");
        return Ok(out);
    }
    let categories: Vec<String> = irs.iter().map(|&r| ir_label(r)).collect();
    for &cl in &cfg.classifiers {
        let series: Vec<Series> = cfg
            .methods
            .iter()
            .map(|&m| Series {
                name: m.name().to_string(),
                points: irs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &ir)| {
                        report
                            .cells
                            .iter()
                            .find(|c| {
                                c.row_kind == RowKind::Method && c.row == m.name() && c.classifier == cl && c.ir == ir
                            })
                            .and_then(|c| c.f1)
                            .map(|f| (i, f))
                    })
                    .collect(),
            })
            .collect();
        let svg = line_chart(
            &format!("F1 by imbalance ratio ({cl})"),
            "imbalance ratio (minority:majority)",
            &categories,
            &series,
            Some(&stamp),
        );
        let path = dir.join(format!("ir_sweep_{}.svg", cl.name()));
        write_text(&path, &svg)?;
        out.push(path);
    }
    Ok(out)
}

pub fn emit_diagnostics(diag: &Diagnostics, dir: &Path, stamp: Option<&str>) -> Result<Vec<PathBuf>> {
    let m = file_safe(&diag.method);
    let mut out = Vec::new();
    let ks_path = dir.join(format!("ks_{m}.csv"));
    write_ks_csv(&diag.ks, stamp, &ks_path)?;
    out.push(ks_path);
    let hist_dir = dir.join("histograms");
    fs::create_dir_all(&hist_dir).map_err(|e| Error::io(&hist_dir, e))?;
    for h in &diag.histograms {
        let p = hist_dir.join(format!("{m}_{}.csv", file_safe(&h.feature)));
        let s = format!("{} feature={} log10(x+{})", stamp.unwrap_or(""), h.feature, h.offset);
        write_histogram_csv(h, Some(s.trim_start()), &p)?;
        out.push(p);
    }
    if let Some(e) = &diag.embedding {
        let p = dir.join(format!("tsne_{m}.csv"));
        write_embedding_csv(e, stamp, &p)?;
        out.push(p);
        let pts: Vec<(f64, f64, u8)> = e
            .coords
            .iter_rows()
            .zip(&e.tags)
            .map(|(r, &t)| (r[0], r[1], t))
            .collect();
        let svg = scatter(
            &format!("t-SNE: real vs {} synthetic", diag.method),
            &pts,
            &[(0, "majority"), (1, "minority"), (2, "synthetic")],
            stamp,
        );
        let p = dir.join(format!("tsne_{m}.svg"));
        write_text(&p, &svg)?;
        out.push(p);
    }
    Ok(out)
}

/// Writes every artifact of `report` into `dir` and returns the paths.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stamp = report.stamp.line();
    let mut out = emit_f1_table(report, dir)?;
    out.extend(emit_ir_sweep(report, dir)?);
    if let Some(d) = &report.diagnostics {
        out.extend(emit_diagnostics(d, dir, Some(&stamp))?);
    }
    for t in &report.loss_traces {
        let p = dir.join(format!("loss_{}_{}.csv", t.method.name(), file_safe(&ir_label(t.ir))));
        let mut f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        writeln!(f, "# {stamp}").map_err(|e| Error::io(&p, e))?;
        write_loss_trace(&t.records, &mut f)?;
        out.push(p);
    }
    let models = dir.join("models.json");
    let json = serde_json::to_string_pretty(&report.baseline_models).expect("serialisable");
    write_text(&models, &(json + "\n"))?;
    out.push(models);
    let rp = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("serialisable");
    write_text(&rp, &(json + "\n"))?;
    out.push(rp);
    Ok(out)
}
