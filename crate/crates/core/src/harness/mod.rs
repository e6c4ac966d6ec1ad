//! Experiment orchestration: sampling schemes and augmentation methods
//! crossed with classifiers and imbalance ratios, plus artifact emitters.

mod config;
mod diagnostics;
mod emit;
mod run;
pub mod svg;

pub use config::{
    harness_gan_default, DataSource, DiagnosticsSettings, ExperimentConfig, Knobs, Method, TsneSettings,
    TuningSettings, SCHEMA_VERSION,
};
pub use diagnostics::{diagnose, Diagnostics};
pub use emit::{emit_diagnostics, emit_f1_table, emit_ir_sweep, f1_rows, ir_label, write_outputs, F1Row};
pub use run::{
    augment, load_pool, run_experiment, split_pool, Augmentation, Cell, EnvironmentStamp, ExperimentReport, LossTrace,
    RowKind, TuningRecord,
};
