use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{FlowProfile, SamplingScheme};
use crate::error::{Error, Result};
use crate::generative::{GanConfig, OptimizerKind};
use crate::models::{HyperGrid, ModelKind, ModelParams};
use crate::oversample::{EnnMode, TomekPolicy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Smote,
    Borderline,
    SmoteEnn,
    SmoteTomek,
    Adasyn,
    Gan,
    Ctgan,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::None,
        Method::Smote,
        Method::Borderline,
        Method::SmoteEnn,
        Method::SmoteTomek,
        Method::Adasyn,
        Method::Gan,
        Method::Ctgan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Smote => "smote",
            Method::Borderline => "borderline",
            Method::SmoteEnn => "smote_enn",
            Method::SmoteTomek => "smote_tomek",
            Method::Adasyn => "adasyn",
            Method::Gan => "gan",
            Method::Ctgan => "ctgan",
        }
    }

    pub fn is_generative(self) -> bool {
        matches!(self, Method::Gan | Method::Ctgan)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Generated {
        n: usize,
        /// Minority:majority ratio of the generated pool.
        ir: f64,
        #[serde(default)]
        profile: FlowProfile,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "default_label")]
        label_column: String,
        /// Derive labels from the throughput column instead of reading them.
        #[serde(default)]
        slow_threshold: Option<f64>,
        #[serde(default = "default_tput")]
        throughput_column: String,
    },
}

fn default_label() -> String {
    "label".into()
}

fn default_tput() -> String {
    "tput".into()
}

/// Per-method settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    pub k: usize,
    pub beta: f64,
    pub enn_mode: EnnMode,
    pub tomek_policy: TomekPolicy,
    /// Partial tables override individual fields of [`harness_gan_default`].
    #[serde(deserialize_with = "over_harness_default")]
    pub gan: GanConfig,
    #[serde(deserialize_with = "over_harness_default")]
    pub ctgan: GanConfig,
    /// Feature names treated as categorical by the conditional GAN.
    pub discrete_columns: Vec<String>,
}

/// Generator settings used by experiments unless overridden: Adam with a
/// weight-averaged generator.
pub fn harness_gan_default() -> GanConfig {
    GanConfig {
        optimizer: OptimizerKind::adam(),
        generator_ema: 0.999,
        ..GanConfig::default()
    }
}

fn over_harness_default<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<GanConfig, D::Error> {
    use serde::de::Error as _;
    let patch = serde_json::Value::deserialize(de)?;
    let mut base = serde_json::to_value(harness_gan_default()).map_err(D::Error::custom)?;
    match (&mut base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                if !b.contains_key(&k) {
                    return Err(D::Error::custom(format!("unknown GAN field `{k}`")));
                }
                b.insert(k, v);
            }
        }
        _ => return Err(D::Error::custom("GAN settings must be a table")),
    }
    serde_json::from_value(base).map_err(D::Error::custom)
}

impl Default for Knobs {
    fn default() -> Self {
        let gen = harness_gan_default();
        Knobs {
            k: 5,
            beta: 1.0,
            enn_mode: EnnMode::Standard,
            tomek_policy: TomekPolicy::RemoveMajority,
            gan: gen.clone(),
            ctgan: gen,
            discrete_columns: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneSettings {
    pub enabled: bool,
    /// Cap on embedded rows; each origin class is subsampled evenly.
    pub max_points: usize,
    pub perplexity: f64,
    pub iterations: usize,
}

impl Default for TsneSettings {
    fn default() -> Self {
        TsneSettings {
            enabled: true,
            max_points: 600,
            perplexity: 30.0,
            iterations: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSettings {
    pub enabled: bool,
    /// Defaults to the first configured generative method, else the first
    /// augmenting method.
    pub method: Option<Method>,
    pub bins: usize,
    pub tsne: TsneSettings,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        DiagnosticsSettings {
            enabled: true,
            method: None,
            bins: 30,
            tsne: TsneSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSettings {
    /// Grid-search each classifier on the balanced baseline; otherwise use
    /// `params` directly.
    pub enabled: bool,
    pub grid: HyperGrid,
    pub params: ModelParams,
}

impl Default for TuningSettings {
    fn default() -> Self {
        TuningSettings {
            enabled: true,
            grid: HyperGrid::default(),
            params: ModelParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Does not affect results.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSource,
    /// Fraction of the pool's minority rows held out for testing, with an
    /// equal number of majority rows.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Baseline sampling schemes reported as their own rows.
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    pub methods: Vec<Method>,
    pub classifiers: Vec<ModelKind>,
    pub irs: Vec<f64>,
    /// Fraction of the training pool's minority rows used in IR-sweep cells.
    #[serde(default = "default_sweep_fraction")]
    pub sweep_minority_fraction: f64,
    /// Also report stratified CV F1 on each cell's training set.
    #[serde(default)]
    pub cell_cv_folds: usize,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default)]
    pub tuning: TuningSettings,
    #[serde(default)]
    pub diagnostics: DiagnosticsSettings,
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_schemes() -> Vec<String> {
    vec!["train2".into()]
}

fn default_sweep_fraction() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let DataSource::Csv { path: data, .. } = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.classifiers.is_empty() {
            return fail("classifiers must not be empty".into());
        }
        if self.irs.is_empty() {
            return fail("irs must not be empty".into());
        }
        if let Some(bad) = self.irs.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return fail(format!("imbalance ratio {bad} outside (0, 1]"));
        }
        for s in &self.schemes {
            if SamplingScheme::named(s).is_none() {
                return fail(format!("unknown sampling scheme '{s}'"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if !(self.sweep_minority_fraction > 0.0 && self.sweep_minority_fraction <= 1.0) {
            return fail(format!(
                "sweep_minority_fraction {} outside (0, 1]",
                self.sweep_minority_fraction
            ));
        }
        if let DataSource::Generated { n, ir, .. } = &self.data {
            if !(*ir > 0.0 && *ir <= 1.0) || *n < 10 {
                return fail(format!(
                    "generated data needs n >= 10 and ir in (0, 1], got n={n} ir={ir}"
                ));
            }
        }
        self.knobs.gan.validate()?;
        self.knobs.ctgan.validate()?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, ignoring settings that do not
    /// influence results (worker count, output directory).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output_dir = None;
        let json = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
methods = ["none", "smote"]
classifiers = ["tree"]
irs = [0.5]

[data]
source = "generated"
n = 2000
ir = 0.2
"#;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.methods, vec![Method::None, Method::Smote]);
        assert_eq!(c.schemes, vec!["train2".to_string()]);
        assert_eq!(c.knobs.k, 5);
    }

    #[test]
    fn rejects_bad_values() {
        let bad_ir = MINIMAL.replace("irs = [0.5]", "irs = [1.5]");
        assert!(ExperimentConfig::from_toml_str(&bad_ir).is_err());
        let bad_version = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(ExperimentConfig::from_toml_str(&bad_version).is_err());
        let no_methods = MINIMAL.replace(r#"["none", "smote"]"#, "[]");
        assert!(ExperimentConfig::from_toml_str(&no_methods).is_err());
        let unknown = MINIMAL.replace(r#""smote""#, r#""mixup""#);
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }

    #[test]
    fn partial_gan_table_keeps_harness_defaults() {
        let c = ExperimentConfig::from_toml_str(&format!("{MINIMAL}\n[knobs.gan]\nepochs = 7\n")).unwrap();
        assert_eq!(c.knobs.gan.epochs, 7);
        assert_eq!(c.knobs.gan.generator_ema, 0.999);
        assert_eq!(c.knobs.gan.optimizer, OptimizerKind::adam());
        assert_eq!(c.knobs.ctgan, harness_gan_default());
        let typo = format!("{MINIMAL}\n[knobs.gan]\nepoch = 7\n");
        assert!(ExperimentConfig::from_toml_str(&typo).is_err());
    }

    #[test]
    fn hash_ignores_workers() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.workers = 7;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
