use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, Knobs, Method};
use super::diagnostics::{diagnose, Diagnostics};
use crate::dataset::{apply_scheme, generate_flows, load_csv, CsvOptions, Dataset, SamplingScheme, NORMAL, SLOW};
use crate::error::{Error, Result};
use crate::evaluate::{cross_val_f1, f1, ConfusionCounts};
use crate::generative::{train_ctgan, train_gan, GanConfig, LossRecord};
use crate::models::{grid_search, GridResult, ModelKind, ModelParams, ModelSpec, ModelSummary};
use crate::oversample::{adasyn, borderline_smote, smote, smote_enn, smote_tomek, AugmentedSet, OversampleConfig};
use crate::seeding;

/// Seed, version and config hash embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
}

impl EnvironmentStamp {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        EnvironmentStamp {
            tool: "slowflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: cfg.schema_version,
            seed: cfg.seed,
            config_hash: cfg.hash(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} schema={} seed={} config={}",
            self.tool, self.version, self.schema_version, self.seed, self.config_hash
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Scheme,
    Method,
}

/// One (row, classifier, IR) result. `f1` is `None` when the cell failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: String,
    pub row_kind: RowKind,
    pub classifier: ModelKind,
    pub ir: f64,
    pub f1: Option<f64>,
    pub counts: Option<ConfusionCounts>,
    pub cv_f1: Option<f64>,
    pub train_rows: usize,
    pub synthetic_rows: usize,
    pub fallback: Option<Method>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub classifier: ModelKind,
    pub params: ModelParams,
    pub grid: Option<GridResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub method: Method,
    pub ir: f64,
    pub records: Vec<LossRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub stamp: EnvironmentStamp,
    pub config: ExperimentConfig,
    pub train_pool_rows: usize,
    pub test_rows: usize,
    pub test_minority: usize,
    pub tuning: Vec<TuningRecord>,
    pub baseline_models: Vec<ModelSummary>,
    pub cells: Vec<Cell>,
    pub loss_traces: Vec<LossTrace>,
    pub diagnostics: Option<Diagnostics>,
    pub diagnostics_error: Option<String>,
}

impl ExperimentReport {
    pub fn failed_cells(&self) -> Vec<&Cell> {
        self.cells.iter().filter(|c| c.error.is_some()).collect()
    }

    pub fn cell(&self, row: &str, classifier: ModelKind, ir: f64) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.row == row && c.classifier == classifier && c.ir == ir)
    }
}

pub fn load_pool(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Generated { n, ir, profile } => generate_flows(
            *n,
            *ir,
            seeding::derive_seed(cfg.seed, &[seeding::tag("pool")]),
            profile,
        ),
        DataSource::Csv {
            path,
            label_column,
            slow_threshold,
            throughput_column,
        } => load_csv(
            path,
            &CsvOptions {
                label_column: label_column.clone(),
                slow_threshold: *slow_threshold,
                throughput_column: throughput_column.clone(),
            },
        ),
    }
}

/// Holds out `test_fraction` of the minority rows plus as many majority
/// rows (the balanced test rule); the rest is the training pool.
pub fn split_pool(pool: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut rng = seeding::stream(seed, &[seeding::tag("split")]);
    let mut min: Vec<usize> = (0..pool.n()).filter(|&i| pool.label(i) == SLOW).collect();
    let mut maj: Vec<usize> = (0..pool.n()).filter(|&i| pool.label(i) == NORMAL).collect();
    min.shuffle(&mut rng);
    maj.shuffle(&mut rng);
    let n_test = ((min.len() as f64 * test_fraction).round() as usize).max(1);
    if n_test >= min.len() || n_test >= maj.len() {
        return Err(Error::InsufficientRows {
            class: "minority",
            requested: n_test + 1,
            available: min.len().min(maj.len()),
        });
    }
    let mut test: Vec<usize> = min[..n_test].iter().chain(&maj[..n_test]).copied().collect();
    let mut train: Vec<usize> = min[n_test..].iter().chain(&maj[n_test..]).copied().collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok((pool.select(&train)?, pool.select(&test)?))
}

/// Result of balancing one training set.
#[derive(Clone, Debug)]
pub struct Augmentation {
    pub set: AugmentedSet,
    pub fallback: Option<Method>,
    pub loss_trace: Option<Vec<LossRecord>>,
}

/// Balances `train` with `method`. Borderline-SMOTE without DANGER rows and
/// ADASYN without majority neighbours fall back to SMOTE.
pub fn augment(method: Method, train: &Dataset, knobs: &Knobs, seed: u64) -> Result<Augmentation> {
    let os = OversampleConfig {
        k: knobs.k,
        beta: knobs.beta,
        enn_mode: knobs.enn_mode,
        tomek_policy: knobs.tomek_policy,
        ..OversampleConfig::default()
    };
    let plain = |set| Augmentation {
        set,
        fallback: None,
        loss_trace: None,
    };
    let with_fallback = |r: Result<AugmentedSet>| match r {
        Err(e @ (Error::NoBorderline | Error::DegenerateDensity)) => {
            log::warn!("{method}: {e}; falling back to smote");
            Ok(Augmentation {
                set: smote(train, &os, seed)?,
                fallback: Some(Method::Smote),
                loss_trace: None,
            })
        }
        other => other.map(plain),
    };
    match method {
        Method::None => Ok(plain(AugmentedSet::unaugmented(train.clone()))),
        Method::Smote => smote(train, &os, seed).map(plain),
        Method::Borderline => with_fallback(borderline_smote(train, &os, seed)),
        Method::SmoteEnn => smote_enn(train, &os, seed).map(plain),
        Method::SmoteTomek => smote_tomek(train, &os, seed).map(plain),
        Method::Adasyn => with_fallback(adasyn(train, &os, seed)),
        Method::Gan | Method::Ctgan => generative_augment(method, train, knobs, seed),
    }
}

fn generative_augment(method: Method, train: &Dataset, knobs: &Knobs, seed: u64) -> Result<Augmentation> {
    let minority = train.class_rows(SLOW);
    let need = train.count(NORMAL).saturating_sub(minority.rows());
    let base = if method == Method::Gan {
        &knobs.gan
    } else {
        &knobs.ctgan
    };
    let mut cfg = GanConfig {
        seed: seeding::derive_seed(seed, &[seeding::tag("train")]),
        ..base.clone()
    };
    let cap = (minority.rows() / 2).max(1);
    if cfg.batch_size > cap {
        log::warn!(
            "{method}: {} minority rows; batch size reduced from {} to {cap}",
            minority.rows(),
            cfg.batch_size
        );
        cfg.batch_size = cap;
    }
    let model = if method == Method::Gan {
        train_gan(&minority, &cfg)?
    } else {
        let discrete = knobs
            .discrete_columns
            .iter()
            .map(|name| {
                train
                    .feature_index(name)
                    .ok_or_else(|| Error::Schema(format!("discrete column `{name}` not found")))
            })
            .collect::<Result<Vec<_>>>()?;
        train_ctgan(&minority, &discrete, &cfg)?
    };
    let synthetic = model.sample(need, seeding::derive_seed(seed, &[seeding::tag("sample")]))?;
    let provenance = vec![None; synthetic.rows()];
    Ok(Augmentation {
        set: AugmentedSet::new(train.clone(), synthetic, provenance)?,
        fallback: None,
        loss_trace: Some(model.loss_trace),
    })
}

fn ir_scheme(train_pool: &Dataset, fraction: f64, ir: f64) -> SamplingScheme {
    let m = ((train_pool.count(SLOW) as f64 * fraction).round() as usize).max(1);
    SamplingScheme::with_ir(format!("ir-{ir}"), m, ir)
}

struct Trained<'a> {
    row: String,
    row_kind: RowKind,
    ir: f64,
    outcome: Result<(Dataset, usize, Option<Method>)>,
    seed: u64,
    test: &'a Dataset,
}

fn evaluate_cells(t: Trained<'_>, tuned: &[(ModelKind, ModelParams)], cv_folds: usize) -> Vec<Cell> {
    tuned
        .par_iter()
        .enumerate()
        .map(|(ci, &(classifier, params))| {
            let mut cell = Cell {
                row: t.row.clone(),
                row_kind: t.row_kind,
                classifier,
                ir: t.ir,
                f1: None,
                counts: None,
                cv_f1: None,
                train_rows: 0,
                synthetic_rows: 0,
                fallback: None,
                error: None,
            };
            let (train, synthetic, fallback) = match &t.outcome {
                Ok(v) => v,
                Err(e) => {
                    cell.error = Some(e.to_string());
                    return cell;
                }
            };
            cell.train_rows = train.n();
            cell.synthetic_rows = *synthetic;
            cell.fallback = *fallback;
            let spec = ModelSpec::new(classifier, params);
            let seed = seeding::derive_seed(t.seed, &[ci as u64]);
            let scored = (|| -> Result<(ConfusionCounts, Option<f64>)> {
                let model = spec.fit(train, seed)?;
                let counts = ConfusionCounts::from_predictions(t.test.labels(), &model.predict_all(t.test))?;
                let cv = if cv_folds >= 2 {
                    Some(cross_val_f1(train, &spec, cv_folds, seed)?.mean_f1)
                } else {
                    None
                };
                Ok((counts, cv))
            })();
            match scored {
                Ok((counts, cv)) => {
                    cell.f1 = Some(f1(&counts));
                    cell.counts = Some(counts);
                    cell.cv_f1 = cv;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| run_inner(cfg))
    } else {
        run_inner(cfg)
    }
}

fn diagnostics_method(cfg: &ExperimentConfig) -> Option<Method> {
    if !cfg.diagnostics.enabled {
        return None;
    }
    cfg.diagnostics.method.or_else(|| {
        cfg.methods
            .iter()
            .copied()
            .find(|m| m.is_generative())
            .or_else(|| cfg.methods.iter().copied().find(|&m| m != Method::None))
    })
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let stamp = EnvironmentStamp::new(cfg);
    let pool = load_pool(cfg)?;
    let (train_pool, test) = split_pool(&pool, cfg.test_fraction, cfg.seed)?;
    log::info!(
        "pool {} rows; training pool {}; test {} ({} slow)",
        pool.n(),
        train_pool.n(),
        test.n(),
        test.count(SLOW)
    );

    let baseline = apply_scheme(
        &train_pool,
        &SamplingScheme::train2(),
        seeding::derive_seed(cfg.seed, &[seeding::tag("baseline")]),
    )?;
    let tuning = cfg
        .classifiers
        .iter()
        .map(|&kind| {
            if cfg.tuning.enabled {
                let g = grid_search(&baseline, kind, &cfg.tuning.grid, cfg.seed)?;
                log::info!("{kind}: tuned {:?} (cv F1 {:.3})", g.best, g.best_mean_f1);
                Ok(TuningRecord {
                    classifier: kind,
                    params: g.best,
                    grid: Some(g),
                })
            } else {
                Ok(TuningRecord {
                    classifier: kind,
                    params: cfg.tuning.params,
                    grid: None,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tuned: Vec<(ModelKind, ModelParams)> = tuning.iter().map(|t| (t.classifier, t.params)).collect();
    let baseline_models = tuned
        .iter()
        .map(|&(k, p)| {
            let m = ModelSpec::new(k, p).fit(&baseline, cfg.seed)?;
            Ok(m.summary(baseline.feature_names()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    let scheme_cells: Vec<Vec<Cell>> = cfg
        .schemes
        .par_iter()
        .enumerate()
        .map(|(si, name)| {
            let scheme = SamplingScheme::named(name).expect("validated");
            let seed = seeding::derive_seed(cfg.seed, &[seeding::tag("scheme"), si as u64]);
            let outcome = apply_scheme(&train_pool, &scheme, seed).map(|d| (d, 0, None));
            evaluate_cells(
                Trained {
                    row: name.clone(),
                    row_kind: RowKind::Scheme,
                    ir: scheme.ir,
                    outcome,
                    seed,
                    test: &test,
                },
                &tuned,
                cfg.cell_cv_folds,
            )
        })
        .collect();
    cells.extend(scheme_cells.into_iter().flatten());

    let sweeps: Vec<Result<Dataset>> = cfg
        .irs
        .iter()
        .enumerate()
        .map(|(ii, &ir)| {
            let scheme = ir_scheme(&train_pool, cfg.sweep_minority_fraction, ir);
            apply_scheme(
                &train_pool,
                &scheme,
                seeding::derive_seed(cfg.seed, &[seeding::tag("sweep"), ii as u64]),
            )
        })
        .collect();
    let diag_method = diagnostics_method(cfg);
    let jobs: Vec<(Method, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.irs.len()).map(move |ii| (m, ii)))
        .collect();
    type Job = (Vec<Cell>, Option<LossTrace>, Option<Result<Diagnostics>>);
    let results: Vec<Job> = jobs
        .par_iter()
        .map(|&(method, ii)| {
            let ir = cfg.irs[ii];
            let seed = seeding::derive_seed(cfg.seed, &[seeding::tag(method.name()), ii as u64]);
            let augmented = match &sweeps[ii] {
                Ok(train) => augment(method, train, &cfg.knobs, seed),
                Err(e) => Err(Error::Parameter(format!("training set for IR {ir}: {e}"))),
            };
            let mut trace = None;
            let mut diag = None;
            let outcome = augmented.and_then(|a| {
                if let Some(records) = &a.loss_trace {
                    trace = Some(LossTrace {
                        method,
                        ir,
                        records: records.clone(),
                    });
                }
                if diag_method == Some(method) && ii == 0 {
                    let train = a.set.base.clone();
                    diag = Some(diagnose(
                        &train.class_rows(SLOW),
                        &a.set.synthetic_kept(),
                        Some(&train.class_rows(NORMAL)),
                        train.feature_names(),
                        method.name(),
                        &cfg.diagnostics,
                        seeding::derive_seed(cfg.seed, &[seeding::tag("diagnostics")]),
                    ));
                }
                let synthetic = a.set.kept_synthetic.len();
                Ok((a.set.to_dataset()?, synthetic, a.fallback))
            });
            match &outcome {
                Ok((d, syn, _)) => log::info!("{method} at IR {ir}: {} training rows ({syn} synthetic)", d.n()),
                Err(e) => log::warn!("{method} at IR {ir}: {e}"),
            }
            let cells = evaluate_cells(
                Trained {
                    row: method.name().to_string(),
                    row_kind: RowKind::Method,
                    ir,
                    outcome,
                    seed,
                    test: &test,
                },
                &tuned,
                cfg.cell_cv_folds,
            );
            (cells, trace, diag)
        })
        .collect();

    let mut loss_traces = Vec::new();
    let mut diagnostics = None;
    let mut diagnostics_error = None;
    for (c, t, d) in results {
        cells.extend(c);
        loss_traces.extend(t);
        match d {
            Some(Ok(d)) => diagnostics = Some(d),
            Some(Err(e)) => diagnostics_error = Some(e.to_string()),
            None => {}
        }
    }
    Ok(ExperimentReport {
        stamp,
        config: cfg.clone(),
        train_pool_rows: train_pool.n(),
        test_rows: test.n(),
        test_minority: test.count(SLOW),
        tuning,
        baseline_models,
        cells,
        loss_traces,
        diagnostics,
        diagnostics_error,
    })
}
