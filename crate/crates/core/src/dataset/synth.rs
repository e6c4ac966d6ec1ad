//! Synthetic tstat-like flow records.
//!
//! Each row belongs to a throughput regime. Slow rows come from the
//! low-throughput regime. Normal rows come from the high-throughput regime,
//! except for an `overlap` fraction that is drawn from the slow regime but
//! still labelled normal, which bounds how confidently any classifier can
//! call a slow-looking flow slow.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, NORMAL, SLOW};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

pub const FLOW_FEATURES: [&str; 8] = [
    "size",
    "durat",
    "tput",
    "prev_tput",
    "prev_size",
    "prev_durat",
    "prev_rtt_max",
    "size_ratio",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowProfile {
    /// Gap in decades between normal and slow median throughput.
    pub separation: f64,
    /// Standard deviation of log10 throughput within a regime.
    pub tput_spread: f64,
    /// Fraction of normal transfers drawn from the slow regime.
    pub overlap: f64,
    /// Log-scale noise relating the previous connection to the current one.
    pub history_noise: f64,
}

impl Default for FlowProfile {
    fn default() -> Self {
        FlowProfile {
            separation: 1.0,
            tput_spread: 0.3,
            overlap: 0.08,
            history_noise: 0.25,
        }
    }
}

impl FlowProfile {
    /// Features whose within-class distribution has a single mode.
    pub fn unimodal_features() -> &'static [&'static str] {
        &["tput", "prev_tput", "prev_rtt_max", "size_ratio"]
    }

    fn validate(&self) -> Result<()> {
        let ok = self.separation.is_finite()
            && self.separation >= 0.0
            && self.tput_spread > 0.0
            && (0.0..1.0).contains(&self.overlap)
            && self.history_noise >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid flow profile {self:?}")))
        }
    }
}

struct Regime {
    log_tput: Normal<f64>,
    log_rtt: Normal<f64>,
}

fn regime(mean_tput: f64, spread: f64, mean_rtt: f64) -> Regime {
    Regime {
        log_tput: Normal::new(mean_tput, spread).expect("positive spread"),
        log_rtt: Normal::new(mean_rtt, 0.25).expect("positive spread"),
    }
}

/// Generates `n_total` records with `round(n_total·ir/(1+ir))` slow rows.
pub fn generate_flows(n_total: usize, ir: f64, seed: u64, profile: &FlowProfile) -> Result<Dataset> {
    if !(ir > 0.0 && ir <= 1.0) {
        return Err(Error::Parameter(format!("ir {ir} outside (0, 1]")));
    }
    if n_total < 10 {
        return Err(Error::Parameter(format!("n_total {n_total} < 10")));
    }
    profile.validate()?;

    let n_slow = (n_total as f64 * ir / (1.0 + ir)).round() as usize;
    let mut rng = seeding::stream(seed, &[seeding::tag("flows")]);

    let fast = regime(8.0, profile.tput_spread, -1.6);
    let slow = regime(
        8.0 - profile.separation,
        profile.tput_spread,
        -1.6 + 0.35 * profile.separation,
    );
    let small_files = Normal::new(6.3, 0.45).expect("valid");
    let large_files = Normal::new(8.7, 0.5).expect("valid");
    let history = Normal::new(0.0, profile.history_noise.max(1e-12)).expect("valid");
    let rtt_history = Normal::new(0.0, 0.5 * profile.history_noise.max(1e-12)).expect("valid");

    let mut labels: Vec<u8> = (0..n_total).map(|i| if i < n_slow { SLOW } else { NORMAL }).collect();
    labels.shuffle(&mut rng);

    let mut data = Vec::with_capacity(n_total * FLOW_FEATURES.len());
    for &label in &labels {
        let from_slow = label == SLOW || rng.random::<f64>() < profile.overlap;
        let r = if from_slow { &slow } else { &fast };

        let log_size = if rng.random::<f64>() < 0.55 {
            small_files.sample(&mut rng)
        } else {
            large_files.sample(&mut rng)
        };
        let size = 10f64.powf(log_size);
        let durat = size / 10f64.powf(r.log_tput.sample(&mut rng));
        let tput = size / durat;
        let rtt = 10f64.powf(r.log_rtt.sample(&mut rng));

        let prev_size = size * history.sample(&mut rng).exp();
        let prev_tput = tput * history.sample(&mut rng).exp();
        let prev_durat = prev_size / prev_tput;
        let prev_rtt_max = rtt * rtt_history.sample(&mut rng).exp();
        let size_ratio = size / prev_size;

        data.extend_from_slice(&[
            size,
            durat,
            tput,
            prev_tput,
            prev_size,
            prev_durat,
            prev_rtt_max,
            size_ratio,
        ]);
    }

    Dataset::new(
        Matrix::from_vec(n_total, FLOW_FEATURES.len(), data)?,
        labels,
        FLOW_FEATURES.iter().map(|s| s.to_string()).collect(),
    )
}
