//! Adversarial training shared by the plain GAN and the conditional
//! mode-normalized GAN.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ctgan::CondSampler;
use super::mode::{ModeNormalizer, Span, SpanKind};
use super::net::{sigmoid, softplus, FeedforwardNet, GradWrt, OutputActivation};
use super::optim::{Optimizer, OptimizerKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Discriminator updates per generator update.
    pub d_steps: usize,
    pub optimizer: OptimizerKind,
    /// Gumbel-softmax temperature for indicator outputs.
    pub gumbel_tau: f64,
    pub max_modes: usize,
    /// Decay of an exponential moving average over generator weights; the
    /// averaged weights become the final generator. 0 disables averaging.
    pub generator_ema: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            noise_dim: 32,
            hidden: vec![128, 128],
            learning_rate: 2e-4,
            batch_size: 64,
            epochs: 2000,
            seed: 0,
            d_steps: 1,
            optimizer: OptimizerKind::default(),
            gumbel_tau: 0.2,
            max_modes: super::mode::DEFAULT_MAX_MODES,
            generator_ema: 0.0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.noise_dim > 0
            && !self.hidden.is_empty()
            && self.hidden.iter().all(|&h| h > 0)
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.epochs >= 1
            && self.d_steps >= 1
            && self.gumbel_tau > 0.0
            && self.max_modes >= 1
            && (0.0..1.0).contains(&self.generator_ema);
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid GAN config {self:?}")))
        }
    }
}

/// Per-epoch training record. `value` is the GAN value function
/// `E[log D(x)] + E[log(1 − D(G(z)))]` on a fixed probe batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub value: f64,
}

/// Per-column affine map onto `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Matrix) -> Self {
        let mut mins = vec![f64::INFINITY; data.cols()];
        let mut maxs = vec![f64::NEG_INFINITY; data.cols()];
        for r in data.iter_rows() {
            for (j, &v) in r.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        MinMaxScaler { mins, maxs }
    }

    pub fn scale(&self, data: &Matrix) -> Matrix {
        let mut out = data.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let range = self.maxs[j] - self.mins[j];
                *v = if range > 0.0 {
                    2.0 * (*v - self.mins[j]) / range - 1.0
                } else {
                    0.0
                };
            }
        }
        out
    }

    pub fn unscale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| self.mins[j] + (v.clamp(-1.0, 1.0) + 1.0) / 2.0 * (self.maxs[j] - self.mins[j]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerativeMethod {
    Gan,
    Ctgan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    MinMax(MinMaxScaler),
    Modes(ModeNormalizer),
}

/// A trained generator together with everything needed to decode its output.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorModel {
    pub method: GenerativeMethod,
    pub encoding: Encoding,
    pub spans: Vec<Span>,
    pub cond: Option<CondSampler>,
    pub generator: FeedforwardNet,
    pub loss_trace: Vec<LossRecord>,
    pub config: GanConfig,
    /// Decoded column count.
    pub d: usize,
}

impl GeneratorModel {
    pub fn cond_width(&self) -> usize {
        self.cond.as_ref().map_or(0, CondSampler::width)
    }

    /// `m` synthetic rows on the original scale.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Matrix> {
        let mut rng = seeding::stream(seed, &[seeding::tag("sample")]);
        let mut out = Matrix::empty(self.d);
        let chunk = 512;
        let mut done = 0;
        while done < m {
            let b = chunk.min(m - done);
            let cond = match &self.cond {
                Some(c) => c.sample_frequency_batch(b, &mut rng),
                None => Matrix::zeros(b, 0),
            };
            let z = noise(b, self.config.noise_dim, &mut rng);
            let logits = self.generator.predict(&z.hstack(&cond)?)?;
            let encoded = head_forward(&logits, &self.spans, self.config.gumbel_tau, Some(&mut rng));
            for r in encoded.iter_rows() {
                let row = match &self.encoding {
                    Encoding::MinMax(s) => s.unscale_row(r),
                    Encoding::Modes(n) => n.decode_soft_row(r)?,
                };
                out.push_row(&row);
            }
            done += b;
        }
        Ok(out)
    }
}

pub(crate) fn noise(rows: usize, dim: usize, rng: &mut seeding::Rng) -> Matrix {
    let data = (0..rows * dim).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, dim, data).expect("sized")
}

fn gumbel(rng: &mut seeding::Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    -(-u.ln()).ln()
}

/// Applies span activations: `tanh` blocks and (Gumbel-)softmax blocks at
/// temperature `tau`. Without an rng no Gumbel noise is added.
pub fn head_forward(logits: &Matrix, spans: &[Span], tau: f64, mut rng: Option<&mut seeding::Rng>) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for s in spans {
            let block = &mut row[s.start..s.start + s.width];
            match s.kind {
                SpanKind::Tanh => block.iter_mut().for_each(|v| *v = v.tanh()),
                SpanKind::Softmax => {
                    if let Some(r) = rng.as_deref_mut() {
                        block.iter_mut().for_each(|v| *v += gumbel(r));
                    }
                    block.iter_mut().for_each(|v| *v /= tau);
                    softmax_in_place(block);
                }
            }
        }
    }
    out
}

fn softmax_in_place(block: &mut [f64]) {
    let m = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in block.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    block.iter_mut().for_each(|v| *v /= s);
}

/// Gradient through [`head_forward`] given its output and the output gradient.
pub fn head_backward(out: &Matrix, grad: &Matrix, spans: &[Span], tau: f64) -> Matrix {
    let mut g = grad.clone();
    for i in 0..g.rows() {
        let y = out.row(i);
        let gr = g.row_mut(i);
        for s in spans {
            let range = s.start..s.start + s.width;
            match s.kind {
                SpanKind::Tanh => {
                    for j in range {
                        gr[j] *= 1.0 - y[j] * y[j];
                    }
                }
                SpanKind::Softmax => {
                    let dot: f64 = range.clone().map(|j| gr[j] * y[j]).sum();
                    for j in range {
                        gr[j] = y[j] * (gr[j] - dot) / tau;
                    }
                }
            }
        }
    }
    g
}

pub(crate) struct TrainedPair {
    pub generator: FeedforwardNet,
    pub discriminator: FeedforwardNet,
    pub trace: Vec<LossRecord>,
}

/// Alternating discriminator/generator updates over encoded rows.
///
/// The discriminator ascends `E[log D(x)] + E[log(1 − D(G(z)))]`; the
/// generator uses the non-saturating objective `E[log D(G(z))]`. With a
/// condition sampler, real rows are drawn per sampled category and the
/// generator also pays a cross-entropy penalty for ignoring its condition.
pub(crate) fn train_adversarial(
    real: &Matrix,
    spans: &[Span],
    cond: Option<&CondSampler>,
    cfg: &GanConfig,
) -> Result<TrainedPair> {
    cfg.validate()?;
    let n = real.rows();
    if n < 2 * cfg.batch_size {
        return Err(Error::Parameter(format!(
            "{n} training rows; need at least twice the batch size {}",
            cfg.batch_size
        )));
    }
    let width = real.cols();
    let cw = cond.map_or(0, CondSampler::width);
    let mut rng = seeding::stream(cfg.seed, &[seeding::tag("adversarial")]);

    let mut g_sizes = vec![cfg.noise_dim + cw];
    g_sizes.extend(&cfg.hidden);
    g_sizes.push(width);
    let mut d_sizes = vec![width + cw];
    d_sizes.extend(&cfg.hidden);
    d_sizes.push(1);
    let mut gen = FeedforwardNet::new(&g_sizes, OutputActivation::Linear, &mut rng)?;
    let mut disc = FeedforwardNet::new(&d_sizes, OutputActivation::Sigmoid, &mut rng)?;
    let mut g_opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &gen);
    let mut d_opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &disc);

    // Fixed probe batch for the value function.
    let probe_n = n.min(256);
    let mut probe_rng = seeding::stream(cfg.seed, &[seeding::tag("probe")]);
    let (probe_real, probe_cond) = draw_real(real, cond, probe_n, None, &mut probe_rng);
    let probe_z = noise(probe_n, cfg.noise_dim, &mut probe_rng);
    let probe_gumbel_seed: u64 = probe_rng.random();

    let mut ema = (cfg.generator_ema > 0.0).then(|| gen.params_flat());
    let steps = n.div_ceil(cfg.batch_size);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut d_sum, mut g_sum) = (0.0, 0.0);
        for step in 0..steps {
            for _ in 0..cfg.d_steps {
                let chunk = &order[step * cfg.batch_size..((step + 1) * cfg.batch_size).min(n)];
                let b = chunk.len();
                let (real_b, cond_b) = draw_real(real, cond, b, Some(chunk), &mut rng);
                let z = noise(b, cfg.noise_dim, &mut rng);
                let fake_logits = gen.predict(&z.hstack(&cond_b)?)?;
                let fake = head_forward(&fake_logits, spans, cfg.gumbel_tau, Some(&mut rng));

                let rc = disc.forward(&real_b.hstack(&cond_b)?)?;
                let fc = disc.forward(&fake.hstack(&cond_b)?)?;
                let (lr_, lf) = (rc.logits(), fc.logits());
                let mut loss = 0.0;
                let gr = lr_.map(|l| (sigmoid(l) - 1.0) / b as f64);
                let gf = lf.map(|l| sigmoid(l) / b as f64);
                for i in 0..b {
                    loss += softplus(-lr_.get(i, 0)) + softplus(lf.get(i, 0));
                }
                d_sum += loss / b as f64;
                let mut grads = disc.backward(&rc, &gr, GradWrt::Logits)?;
                let gfake = disc.backward(&fc, &gf, GradWrt::Logits)?;
                for (a, f) in grads.weights.iter_mut().zip(&gfake.weights) {
                    a.as_mut_slice().iter_mut().zip(f.as_slice()).for_each(|(x, y)| *x += y);
                }
                for (a, f) in grads.biases.iter_mut().zip(&gfake.biases) {
                    a.iter_mut().zip(f).for_each(|(x, y)| *x += y);
                }
                d_opt.step(&mut disc, &grads);
            }

            // Generator step.
            let b = cfg.batch_size.min(n);
            let (cond_b, picks) = match cond {
                Some(c) => c.sample_training_batch(b, &mut rng),
                None => (Matrix::zeros(b, 0), Vec::new()),
            };
            let z = noise(b, cfg.noise_dim, &mut rng);
            let gc = gen.forward(&z.hstack(&cond_b)?)?;
            let fake = head_forward(gc.output(), spans, cfg.gumbel_tau, Some(&mut rng));
            let dc = disc.forward(&fake.hstack(&cond_b)?)?;
            let lf = dc.logits();
            let mut g_loss = 0.0;
            for i in 0..b {
                g_loss += softplus(-lf.get(i, 0));
            }
            let gl = lf.map(|l| (sigmoid(l) - 1.0) / b as f64);
            let dgrad = disc.backward(&dc, &gl, GradWrt::Logits)?;
            let mut gout = Matrix::zeros(b, width);
            for i in 0..b {
                gout.row_mut(i).copy_from_slice(&dgrad.input.row(i)[..width]);
            }
            let mut glogits = head_backward(&fake, &gout, spans, cfg.gumbel_tau);
            if let Some(c) = cond {
                g_loss += c.condition_penalty(gc.output(), &picks, &mut glogits);
            }
            g_sum += g_loss / b as f64;
            let grads = gen.backward(&gc, &glogits, GradWrt::Output)?;
            g_opt.step(&mut gen, &grads);
            if let Some(avg) = ema.as_mut() {
                let decay = cfg.generator_ema;
                for (a, p) in avg.iter_mut().zip(gen.params_flat()) {
                    *a = decay * *a + (1.0 - decay) * p;
                }
            }
        }

        let mut probe_gumbel = seeding::rng(probe_gumbel_seed);
        let fake_logits = gen.predict(&probe_z.hstack(&probe_cond)?)?;
        let fake = head_forward(&fake_logits, spans, cfg.gumbel_tau, Some(&mut probe_gumbel));
        let lr_ = disc.forward(&probe_real.hstack(&probe_cond)?)?;
        let lf = disc.forward(&fake.hstack(&probe_cond)?)?;
        let value = -(0..probe_n)
            .map(|i| softplus(-lr_.logits().get(i, 0)) + softplus(lf.logits().get(i, 0)))
            .sum::<f64>()
            / probe_n as f64;
        let rec = LossRecord {
            epoch,
            d_loss: d_sum / (steps * cfg.d_steps) as f64,
            g_loss: g_sum / steps as f64,
            value,
        };
        if !(rec.d_loss.is_finite() && rec.g_loss.is_finite() && rec.value.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        trace.push(rec);
    }
    if let Some(avg) = ema {
        gen.set_params_flat(&avg)?;
    }
    Ok(TrainedPair {
        generator: gen,
        discriminator: disc,
        trace,
    })
}

/// Real rows for one discriminator batch plus matching condition vectors.
fn draw_real(
    real: &Matrix,
    cond: Option<&CondSampler>,
    b: usize,
    chunk: Option<&[usize]>,
    rng: &mut seeding::Rng,
) -> (Matrix, Matrix) {
    match cond {
        Some(c) => {
            let (vecs, picks) = c.sample_training_batch(b, rng);
            let rows: Vec<usize> = picks.iter().map(|&p| c.real_row_for(p, rng)).collect();
            (real.select_rows(&rows), vecs)
        }
        None => {
            let rows: Vec<usize> = match chunk {
                Some(ch) => ch.to_vec(),
                None => (0..b).map(|_| rng.random_range(0..real.rows())).collect(),
            };
            (real.select_rows(&rows), Matrix::zeros(b, 0))
        }
    }
}

/// Vanilla GAN over min-max-scaled columns with a `tanh` generator output.
pub fn train_gan(rows: &Matrix, cfg: &GanConfig) -> Result<GeneratorModel> {
    train_gan_with_discriminator(rows, cfg).map(|(m, _)| m)
}

/// [`train_gan`] that also returns the final discriminator, e.g. for
/// real-vs-fake accuracy checks.
pub fn train_gan_with_discriminator(rows: &Matrix, cfg: &GanConfig) -> Result<(GeneratorModel, Discriminator)> {
    let scaler = MinMaxScaler::fit(rows);
    let scaled = scaler.scale(rows);
    let spans = vec![Span {
        kind: SpanKind::Tanh,
        start: 0,
        width: rows.cols(),
    }];
    let pair = train_adversarial(&scaled, &spans, None, cfg)?;
    let disc = Discriminator {
        net: pair.discriminator,
        encoding: Encoding::MinMax(scaler.clone()),
    };
    Ok((
        GeneratorModel {
            method: GenerativeMethod::Gan,
            encoding: Encoding::MinMax(scaler),
            spans,
            cond: None,
            generator: pair.generator,
            loss_trace: pair.trace,
            config: cfg.clone(),
            d: rows.cols(),
        },
        disc,
    ))
}

/// Trained discriminator with the encoding it expects (unconditional only).
#[derive(Clone, Debug)]
pub struct Discriminator {
    net: FeedforwardNet,
    encoding: Encoding,
}

impl Discriminator {
    /// Probability that each raw row is real.
    pub fn prob_real(&self, rows: &Matrix) -> Result<Vec<f64>> {
        let enc = match &self.encoding {
            Encoding::MinMax(s) => s.scale(rows),
            Encoding::Modes(_) => {
                return Err(Error::Parameter(
                    "mode-encoded discriminators need a condition-aware encoding".into(),
                ))
            }
        };
        Ok(self.net.predict(&enc)?.column(0))
    }
}
