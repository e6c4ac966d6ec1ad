//! Exact t-SNE with perplexity-calibrated Gaussian affinities.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::stamped_writer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding;

pub const MAX_POINTS: usize = 5000;
pub const ENTROPY_TOL: f64 = 1e-5;
const BISECTION_STEPS: usize = 200;
const P_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations with exaggerated affinities and momentum 0.5.
    pub exaggeration_iters: usize,
    pub final_momentum: f64,
    pub log_every: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            final_momentum: 0.8,
            log_every: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRecord {
    pub iteration: usize,
    pub kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub coords: Matrix,
    pub tags: Vec<u8>,
    pub kl: f64,
    /// KL(P‖Q) against the unexaggerated P, logged periodically, at the end
    /// of the exaggeration phase, and after the last iteration.
    pub kl_trace: Vec<KlRecord>,
    pub config: TsneConfig,
}

impl EmbeddingResult {
    /// KL at the last logged iteration not after the exaggeration phase.
    pub fn kl_after_exaggeration(&self) -> Option<f64> {
        self.kl_trace
            .iter()
            .rev()
            .find(|r| r.iteration <= self.config.exaggeration_iters)
            .map(|r| r.kl)
    }
}

pub fn squared_distances(rows: &Matrix) -> Matrix {
    let n = rows.rows();
    let mut d = Matrix::zeros(n, n);
    d.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let a = rows.row(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = a.iter().zip(rows.row(j)).map(|(x, y)| (x - y) * (x - y)).sum();
        }
    });
    d
}

/// Row-conditional affinities `p_{j|i}` whose Shannon entropy (nats) matches
/// `ln(perplexity)` within [`ENTROPY_TOL`].
pub fn conditional_affinities(dist: &Matrix, perplexity: f64) -> Result<Matrix> {
    let n = dist.rows();
    let target = perplexity.ln();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(dist.row(i), i, target).ok_or(Error::Bisection { row: i }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_vec(n, n, rows.concat()).expect("n×n"))
}

fn calibrate_row(d: &[f64], i: usize, target: f64) -> Option<Vec<f64>> {
    let d_min = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; d.len()];
    let eval = |beta: f64, p: &mut [f64]| {
        let mut sum = 0.0;
        for (j, (pj, &dj)) in p.iter_mut().zip(d).enumerate() {
            *pj = if j == i { 0.0 } else { (-(dj - d_min) * beta).exp() };
            sum += *pj;
        }
        let mut h = 0.0;
        for pj in p.iter_mut() {
            *pj /= sum;
            if *pj > 0.0 {
                h -= *pj * pj.ln();
            }
        }
        h
    };
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut beta = 1.0 / d.iter().sum::<f64>().max(1e-300) * d.len() as f64;
    for _ in 0..BISECTION_STEPS {
        let h = eval(beta, &mut p);
        if (h - target).abs() < ENTROPY_TOL {
            return Some(p);
        }
        if h > target {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (lo + hi);
        }
    }
    None
}

/// Symmetrised joint affinities `(P + Pᵀ) / 2n`.
pub fn joint_affinities(cond: &Matrix) -> Matrix {
    let n = cond.rows();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, (cond.get(i, j) + cond.get(j, i)) / (2.0 * n as f64));
        }
    }
    p
}

fn check(rows: &Matrix, tags: &[u8], cfg: &TsneConfig) -> Result<()> {
    let n = rows.rows();
    if tags.len() != n {
        return Err(Error::Shape(format!("{} tags for {n} rows", tags.len())));
    }
    if n > MAX_POINTS {
        return Err(Error::Parameter(format!(
            "exact t-SNE limited to {MAX_POINTS} rows, got {n}"
        )));
    }
    let max_perp = (n as f64 - 1.0) / 3.0;
    if !(cfg.perplexity >= 5.0 && cfg.perplexity <= max_perp) {
        return Err(Error::Parameter(format!(
            "perplexity {} outside [5, {max_perp:.2}] for {n} rows",
            cfg.perplexity
        )));
    }
    if !rows.is_finite() {
        return Err(Error::Domain("t-SNE input contains non-finite values".into()));
    }
    Ok(())
}

pub fn tsne(rows: &Matrix, tags: &[u8], cfg: &TsneConfig) -> Result<EmbeddingResult> {
    check(rows, tags, cfg)?;
    let n = rows.rows();
    let cond = match conditional_affinities(&squared_distances(rows), cfg.perplexity) {
        Ok(c) => c,
        Err(Error::Bisection { .. }) => {
            log::warn!("t-SNE affinity bisection failed; retrying with jitter");
            let mut rng = seeding::stream(cfg.seed, &[seeding::tag("tsne-jitter")]);
            let scale = rows.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0) * 1e-6;
            let mut jittered = rows.clone();
            for v in jittered.as_mut_slice() {
                *v += scale * (rng.random::<f64>() - 0.5);
            }
            conditional_affinities(&squared_distances(&jittered), cfg.perplexity)?
        }
        Err(e) => return Err(e),
    };
    let p = joint_affinities(&cond);

    let mut rng = seeding::stream(cfg.seed, &[seeding::tag("tsne")]);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [1e-4 * a, 1e-4 * b]
        })
        .collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut trace = Vec::new();

    for it in 1..=cfg.iterations {
        let exaggerate = it <= cfg.exaggeration_iters;
        let exag = if exaggerate { cfg.early_exaggeration } else { 1.0 };
        let momentum = if exaggerate { 0.5 } else { cfg.final_momentum };
        let (num, z) = student_kernel(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = num[i * n + j];
                    let m = 4.0 * (exag * p.get(i, j) - w / z) * w;
                    g[0] += m * (y[i][0] - y[j][0]);
                    g[1] += m * (y[i][1] - y[j][1]);
                }
                g
            })
            .collect();
        for i in 0..n {
            for c in 0..2 {
                let same = (grad[i][c] > 0.0) == (update[i][c] > 0.0);
                gains[i][c] = if same { gains[i][c] * 0.8 } else { gains[i][c] + 0.2 }.max(0.01);
                update[i][c] = momentum * update[i][c] - cfg.learning_rate * gains[i][c] * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        let mean = y.iter().fold([0.0; 2], |a, r| [a[0] + r[0], a[1] + r[1]]);
        for r in &mut y {
            r[0] -= mean[0] / n as f64;
            r[1] -= mean[1] / n as f64;
        }
        let log_now =
            (cfg.log_every > 0 && it % cfg.log_every == 0) || it == cfg.exaggeration_iters || it == cfg.iterations;
        if log_now {
            let kl = kl_divergence(&p, &y);
            if !kl.is_finite() {
                return Err(Error::TrainingDiverged { epoch: it });
            }
            trace.push(KlRecord { iteration: it, kl });
        }
    }
    let coords = Matrix::from_vec(n, 2, y.iter().flatten().copied().collect()).expect("n×2");
    Ok(EmbeddingResult {
        kl: trace.last().map_or(0.0, |r| r.kl),
        coords,
        tags: tags.to_vec(),
        kl_trace: trace,
        config: cfg.clone(),
    })
}

/// Pairwise `1/(1+|yi−yj|²)` (zero diagonal) and its sum.
fn student_kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    num.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for (j, o) in out.iter_mut().enumerate() {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                *o = 1.0 / (1.0 + dx * dx + dy * dy);
            }
        }
    });
    let z = num.iter().sum();
    (num, z)
}

fn kl_divergence(p: &Matrix, y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (num, z) = student_kernel(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > 0.0 {
                let q = (num[i * n + j] / z).max(P_FLOOR);
                kl += pij * (pij.max(P_FLOOR) / q).ln();
            }
        }
    }
    kl.max(0.0)
}

pub fn write_embedding_csv(e: &EmbeddingResult, stamp: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = stamped_writer(path, stamp)?;
    w.write_record(["x", "y", "class"])?;
    for (r, t) in e.coords.iter_rows().zip(&e.tags) {
        w.write_record([format!("{:.6}", r[0]), format!("{:.6}", r[1]), t.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
