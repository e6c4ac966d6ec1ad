use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use slowflow::harness::{
    emit_f1_table, f1_rows, run_experiment, svg, write_outputs, ExperimentConfig, ExperimentReport, Method, RowKind,
};
use slowflow::models::ModelKind;

const SMALL: &str = r#"
schema_version = 1
seed = 7
schemes = ["train2", "train3"]
methods = ["none", "smote", "adasyn", "gan"]
classifiers = ["tree", "boost"]
irs = [0.5, 0.25]

[data]
source = "generated"
n = 1500
ir = 0.2

[tuning]
enabled = false
params = { max_depth = 6, n_trees = 10 }

[knobs.gan]
epochs = 3
hidden = [16]
noise_dim = 4
batch_size = 16

[diagnostics]
method = "smote"
bins = 10
tsne = { max_points = 90, perplexity = 10.0, iterations = 150 }
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

fn run_small() -> ExperimentReport {
    run_experiment(&small()).unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in walk(dir) {
        let rel = e.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.insert(rel, fs::read(&e).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(walk(&p));
        } else {
            v.push(p);
        }
    }
    v
}

fn csv_records(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes())
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn report_shape_outputs_and_determinism() {
    let report = run_small();
    let cfg = small();
    let schemes = cfg.schemes.len() * cfg.classifiers.len();
    let sweep = cfg.methods.len() * cfg.irs.len() * cfg.classifiers.len();
    assert_eq!(report.cells.len(), schemes + sweep);
    assert!(report.failed_cells().is_empty(), "{:?}", report.failed_cells());
    assert_eq!(report.test_rows, 2 * report.test_minority);
    assert_eq!(report.loss_traces.len(), 2);
    assert!(report
        .loss_traces
        .iter()
        .all(|t| t.method == Method::Gan && t.records.len() == 3));

    let none = report.cell("none", ModelKind::Tree, 0.25).unwrap();
    assert_eq!(none.synthetic_rows, 0);
    let smote = report.cell("smote", ModelKind::Tree, 0.25).unwrap();
    assert!(smote.synthetic_rows > 0);
    assert_eq!(smote.train_rows, none.train_rows + smote.synthetic_rows);

    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, dir.path()).unwrap();
    let files = read_dir(dir.path());
    for name in [
        "f1_table.csv",
        "f1_table.txt",
        "ir_sweep.csv",
        "ir_sweep_tree.svg",
        "ir_sweep_boost.svg",
        "ks_smote.csv",
        "tsne_smote.csv",
        "tsne_smote.svg",
        "loss_gan_1-2.csv",
        "loss_gan_1-4.csv",
        "models.json",
        "report.json",
    ] {
        assert!(files.contains_key(name), "missing {name}: {:?}", files.keys());
    }
    assert!(files.keys().any(|k| k.starts_with("histograms/smote_")));
    let stamp = format!("# {}", report.stamp.line());
    for (name, bytes) in &files {
        if name.ends_with(".csv") {
            let text = String::from_utf8(bytes.clone()).unwrap();
            assert!(text.lines().next().unwrap().starts_with(&stamp), "{name}");
        }
    }

    // The F1 table re-reads to the report's cells.
    let table = csv_records(std::str::from_utf8(&files["f1_table.csv"]).unwrap());
    assert_eq!(&table[0], &csv::StringRecord::from(vec!["row", "ir", "tree", "boost"]));
    assert_eq!(table.len() - 1, cfg.schemes.len() + cfg.methods.len() * cfg.irs.len());
    assert_eq!(&table[1][0], "train2");
    assert_eq!(&table[2][0], "train3");
    for rec in &table[3..] {
        let ir = if &rec[1] == "1:2" { 0.5 } else { 0.25 };
        for (j, clf) in [ModelKind::Tree, ModelKind::Boost].into_iter().enumerate() {
            let cell = report.cell(&rec[0], clf, ir).unwrap();
            assert_eq!(cell.row_kind, RowKind::Method);
            let f: f64 = rec[2 + j].parse().unwrap();
            assert!((f - cell.f1.unwrap()).abs() <= 5e-4);
        }
    }

    // Sweep chart: one polyline per method with one marker per IR, left to right.
    let svg_text = std::str::from_utf8(&files["ir_sweep_tree.svg"]).unwrap();
    let doc = roxmltree::Document::parse(svg_text).unwrap();
    let lines: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .collect();
    let markers = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("marker"))
        .count();
    assert_eq!(lines.len(), cfg.methods.len());
    assert_eq!(markers, cfg.methods.len() * cfg.irs.len());
    for l in lines {
        let xs: Vec<f64> = l
            .attribute("points")
            .unwrap()
            .split_whitespace()
            .map(|p| p.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    let again = tempfile::tempdir().unwrap();
    write_outputs(&run_small(), again.path()).unwrap();
    let second = read_dir(again.path());
    for (name, bytes) in &files {
        if name.ends_with(".csv") || name.ends_with(".svg") || name.ends_with(".txt") {
            assert!(second[name] == *bytes, "{name} differs between runs");
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let mut cfg = small();
    cfg.methods = vec![Method::None, Method::Smote];
    cfg.diagnostics.enabled = false;
    let a = run_experiment(&cfg).unwrap();
    cfg.workers = 1;
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.cells, b.cells);
    assert_eq!(a.stamp, b.stamp);
}

#[test]
fn empty_report_writes_header_only_table() {
    let mut cfg = small();
    cfg.methods = vec![Method::None];
    cfg.classifiers = vec![ModelKind::Tree];
    cfg.diagnostics.enabled = false;
    let mut report = run_experiment(&cfg).unwrap();
    report.cells.clear();
    assert!(f1_rows(&report).is_empty());
    let dir = tempfile::tempdir().unwrap();
    emit_f1_table(&report, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("f1_table.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "row,ir,tree");
}

#[test]
fn single_ir_skips_the_chart() {
    let mut cfg = small();
    cfg.methods = vec![Method::None];
    cfg.classifiers = vec![ModelKind::Tree];
    cfg.irs = vec![0.5];
    cfg.diagnostics.enabled = false;
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, dir.path()).unwrap();
    assert!(dir.path().join("ir_sweep.csv").exists());
    assert!(!dir.path().join("ir_sweep_tree.svg").exists());
}

#[test]
fn svg_escapes_labels() {
    let s = svg::line_chart(
        "a < b & c",
        "x",
        &["1:2".into()],
        &[svg::Series {
            name: "\"q\"".into(),
            points: vec![(0, 0.5)],
        }],
        Some("stamp"),
    );
    let doc = roxmltree::Document::parse(&s).unwrap();
    assert!(doc.descendants().any(|n| n.text() == Some("a < b & c")));
    let scatter = svg::scatter(
        "t",
        &[(0.0, 1.0, 0), (2.0, 3.0, 2)],
        &[(0, "majority"), (2, "synthetic")],
        None,
    );
    let doc = roxmltree::Document::parse(&scatter).unwrap();
    assert_eq!(
        doc.descendants()
            .filter(|n| n.attribute("class") == Some("point"))
            .count(),
        2
    );
}

#[test]
fn config_stamp_ignores_worker_count() {
    let a = small();
    let mut b = a.clone();
    b.workers = 3;
    b.output_dir = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
}
