use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use slowflow::dataset::{generate_flows, load_csv, write_csv, write_tagged_csv, CsvOptions, NORMAL, SLOW};
use slowflow::evaluate::{f1, ConfusionCounts};
use slowflow::harness::{
    augment, diagnose, emit_diagnostics, run_experiment, write_outputs, DiagnosticsSettings, ExperimentConfig, Knobs,
    Method,
};
use slowflow::models::{grid_search, HyperGrid, ModelKind, ModelParams, ModelSpec, TrainedModel};
use slowflow::oversample::Origin;
use slowflow::{Dataset, Error, FlowProfile, Result};

#[derive(Parser)]
#[command(
    name = "slowflow",
    version,
    about = "Class-imbalance experiments for slow network transfers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic flow table as CSV.
    GenData {
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        /// Minority:majority ratio of the generated table.
        #[arg(long, default_value_t = 0.1)]
        ir: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Balance a labelled CSV with one augmentation method.
    Augment {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        method: Method,
        /// Experiment config whose `knobs` section supplies method settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV with an `origin` column (0 majority, 1 minority, 2 synthetic).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a classifier and save it as JSON.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "tree")]
        classifier: ModelKind,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_samples_split: Option<usize>,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Grid-search using the `tuning.grid` of this experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on a labelled CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Optional JSON metrics file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment matrix from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// KS scores, log histograms and t-SNE for a CSV written by `augment`.
    Diagnostics {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label used in output file names.
        #[arg(long, default_value = "augmented")]
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Label rows slow when throughput is below this value instead of
    /// reading the label column.
    #[arg(long)]
    slow_threshold: Option<f64>,
    #[arg(long, default_value = "tput")]
    throughput_column: String,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset> {
        load_csv(
            &self.input,
            &CsvOptions {
                label_column: self.label_column.clone(),
                slow_threshold: self.slow_threshold,
                throughput_column: self.throughput_column.clone(),
            },
        )
    }

    /// [`InputArgs::load`] without the `origin` column written by `augment`.
    fn load_features(&self) -> Result<Dataset> {
        let ds = self.load()?;
        match ds.feature_index(ORIGIN_COLUMN) {
            Some(_) => Ok(ds.split_off_column(ORIGIN_COLUMN)?.0),
            None => Ok(ds),
        }
    }
}

const ORIGIN_COLUMN: &str = "origin";

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_config(path: Option<&Path>) -> Result<Option<ExperimentConfig>> {
    path.map(ExperimentConfig::load).transpose()
}

fn init_threads(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenData { n, ir, seed, out } => {
            let ds = generate_flows(n, ir, seed, &FlowProfile::default())?;
            write_csv(&ds, &out)?;
            println!(
                "wrote {} rows ({} slow, {} normal) to {}",
                ds.n(),
                ds.count(SLOW),
                ds.count(NORMAL),
                out.display()
            );
        }
        Command::Augment {
            input,
            method,
            config,
            seed,
            out,
        } => {
            let ds = input.load()?;
            let knobs = read_config(config.as_deref())?.map_or_else(Knobs::default, |c| c.knobs);
            let a = augment(method, &ds, &knobs, seed)?;
            if let Some(f) = a.fallback {
                eprintln!("note: {method} fell back to {f}");
            }
            let aug = a.set.to_dataset()?;
            write_tagged_csv(
                &aug,
                &a.set.origins(),
                Some(&format!("slowflow augment method={method} seed={seed}")),
                &out,
            )?;
            println!(
                "{method}: {} rows in, {} rows out ({} synthetic) -> {}",
                ds.n(),
                aug.n(),
                a.set.kept_synthetic.len(),
                out.display()
            );
        }
        Command::Train {
            input,
            classifier,
            max_depth,
            min_samples_split,
            n_trees,
            learning_rate,
            config,
            seed,
            out,
        } => {
            let ds = input.load_features()?;
            let mut params = ModelParams::default();
            let mut grid_json = serde_json::Value::Null;
            if let Some(cfg) = read_config(config.as_deref())? {
                let grid: HyperGrid = cfg.tuning.grid;
                let g = grid_search(&ds, classifier, &grid, seed)?;
                println!("grid search: best {:?} (cv F1 {:.3})", g.best, g.best_mean_f1);
                params = g.best;
                grid_json = serde_json::to_value(&g).expect("serialisable");
            }
            params.max_depth = max_depth.unwrap_or(params.max_depth);
            params.min_samples_split = min_samples_split.unwrap_or(params.min_samples_split);
            params.n_trees = n_trees.unwrap_or(params.n_trees);
            params.learning_rate = learning_rate.unwrap_or(params.learning_rate);
            let model = ModelSpec::new(classifier, params).fit(&ds, seed)?;
            let summary = model.summary(ds.feature_names());
            write_json(
                &out,
                &json!({
                    "classifier": classifier,
                    "params": params,
                    "feature_names": ds.feature_names(),
                    "summary": summary,
                    "grid": grid_json,
                    "model": model,
                }),
            )?;
            println!(
                "{classifier}: {} trees, depth {}, {} nodes -> {}",
                summary.n_trees,
                summary.max_depth,
                summary.node_count,
                out.display()
            );
        }
        Command::Evaluate { model, input, out } => {
            let text = std::fs::read_to_string(&model).map_err(|e| Error::io(&model, e))?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::ModelFile(e.to_string()))?;
            let trained: TrainedModel =
                serde_json::from_value(v["model"].clone()).map_err(|e| Error::ModelFile(e.to_string()))?;
            let names: Vec<String> =
                serde_json::from_value(v["feature_names"].clone()).map_err(|e| Error::ModelFile(e.to_string()))?;
            let ds = input.load_features()?;
            if ds.feature_names() != names.as_slice() {
                return Err(Error::Schema(format!(
                    "model expects columns {names:?}, input has {:?}",
                    ds.feature_names()
                )));
            }
            let counts = ConfusionCounts::from_predictions(ds.labels(), &trained.predict_all(&ds))?;
            let score = f1(&counts);
            println!(
                "f1={score:.3} precision={:.3} recall={:.3} tp={} fp={} tn={} fn={}",
                counts.precision(),
                counts.recall(),
                counts.tp,
                counts.fp,
                counts.tn,
                counts.fn_
            );
            if let Some(out) = out {
                write_json(
                    &out,
                    &json!({
                        "f1": score,
                        "f1_defined": counts.f1_defined(),
                        "precision": counts.precision(),
                        "recall": counts.recall(),
                        "counts": counts,
                    }),
                )?;
            }
        }
        Command::Experiment {
            config,
            seed,
            out,
            workers,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
            let report = run_experiment(&cfg)?;
            let files = write_outputs(&report, &dir)?;
            println!("wrote {} files to {}", files.len(), dir.display());
            if let Some(e) = &report.diagnostics_error {
                eprintln!("diagnostics failed: {e}");
            }
            let failed = report.failed_cells();
            if !failed.is_empty() {
                eprintln!("{} of {} cells failed:", failed.len(), report.cells.len());
                for c in failed {
                    eprintln!(
                        "  {} / {} / ir {}: {}",
                        c.row,
                        c.classifier,
                        c.ir,
                        c.error.as_deref().unwrap_or("")
                    );
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Diagnostics {
            input,
            config,
            seed,
            name,
            out,
            workers,
        } => {
            init_threads(workers)?;
            let ds = input.load()?;
            let (ds, origin) = ds.split_off_column(ORIGIN_COLUMN)?;
            let pick = |tag: Origin| {
                let idx: Vec<usize> = (0..ds.n()).filter(|&i| origin[i] == tag as u8 as f64).collect();
                ds.features().select_rows(&idx)
            };
            let (majority, real, synthetic) = (pick(Origin::Majority), pick(Origin::Minority), pick(Origin::Synthetic));
            let settings = read_config(config.as_deref())?.map_or_else(DiagnosticsSettings::default, |c| c.diagnostics);
            let d = diagnose(
                &real,
                &synthetic,
                (majority.rows() > 0).then_some(&majority),
                ds.feature_names(),
                &name,
                &settings,
                seed,
            )?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let stamp = format!("slowflow diagnostics seed={seed}");
            let files = emit_diagnostics(&d, &out, Some(&stamp))?;
            for r in &d.ks {
                println!("{:<16} {:.3}", r.feature, r.score);
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
