#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use slowflow::dataset::{Dataset, NORMAL, SLOW};
use slowflow::generative::{FeedforwardNet, GradWrt, OutputActivation};
use slowflow::oversample::{smote, smote_enn};
use slowflow::{AugmentedSet, Matrix, OversampleConfig};

/// Two overlapping Gaussian-ish blobs with sizes and dimension drawn from `seed`.
pub fn random_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=5);
    let n_min = rng.random_range(15..=40);
    let n_maj = rng.random_range(70..=160);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (count, label, centre) in [(n_min, SLOW, 1.2), (n_maj, NORMAL, 0.0)] {
        for _ in 0..count {
            let r: Vec<f64> = (0..d)
                .map(|j| centre * (j as f64 + 1.0) / d as f64 + normal(&mut rng) * (1.0 + j as f64 * 0.5))
                .collect();
            rows.push(r);
            labels.push(label);
        }
    }
    Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Z-scores with population standard deviation; constant columns keep scale 1.
pub fn zscore(m: &Matrix) -> Vec<Vec<f64>> {
    let n = m.rows() as f64;
    let d = m.cols();
    let mut mean = vec![0.0; d];
    for r in m.iter_rows() {
        for j in 0..d {
            mean[j] += r[j] / n;
        }
    }
    let mut var = vec![0.0; d];
    for r in m.iter_rows() {
        for j in 0..d {
            var[j] += (r[j] - mean[j]).powi(2) / n;
        }
    }
    let sd: Vec<f64> = var
        .iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    m.iter_rows()
        .map(|r| (0..d).map(|j| (r[j] - mean[j]) / sd[j]).collect())
        .collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force neighbours of `q` among `pool` (excluding `q`), sorted by
/// distance then index.
pub fn brute_knn(points: &[Vec<f64>], q: usize, k: usize, pool: &[usize]) -> Vec<usize> {
    let mut c: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&j| j != q)
        .map(|&j| (dist2(&points[q], &points[j]), j))
        .collect();
    c.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    c.into_iter().take(k).map(|(_, j)| j).collect()
}

pub fn rows_of(ds: &Dataset, label: u8) -> Vec<usize> {
    (0..ds.n()).filter(|&i| ds.label(i) == label).collect()
}

/// Largest deviation of a SMOTE-style synthetic row from the segment its
/// provenance records, plus whether every neighbour is a true k-nearest
/// minority neighbour of its parent.
pub fn segment_residual(ds: &Dataset, aug: &AugmentedSet, k: usize) -> (f64, bool) {
    let z = zscore(ds.features());
    let min = rows_of(ds, SLOW);
    let mut worst: f64 = 0.0;
    let mut neighbours_ok = true;
    for (s, prov) in aug.synthetic.iter_rows().zip(&aug.provenance) {
        let p = prov.expect("interpolated rows carry provenance");
        neighbours_ok &= (0.0..=1.0).contains(&p.delta)
            && ds.label(p.parent) == SLOW
            && brute_knn(&z, p.parent, k, &min).contains(&p.neighbor);
        let (a, b) = (ds.row(p.parent), ds.row(p.neighbor));
        for j in 0..ds.d() {
            worst = worst.max((s[j] - (a[j] + p.delta * (b[j] - a[j]))).abs());
        }
    }
    (worst, neighbours_ok)
}

/// ADASYN quotas recomputed from scratch: majority share among each minority
/// row's k nearest neighbours, normalised, floor plus largest remainders
/// (ties to the larger ratio, then the earlier row).
pub fn adasyn_quota_oracle(ds: &Dataset, k: usize, beta: f64) -> Vec<usize> {
    let z = zscore(ds.features());
    let all: Vec<usize> = (0..ds.n()).collect();
    let min = rows_of(ds, SLOW);
    let r: Vec<f64> = min
        .iter()
        .map(|&i| {
            brute_knn(&z, i, k, &all)
                .iter()
                .filter(|&&j| ds.label(j) == NORMAL)
                .count() as f64
                / k as f64
        })
        .collect();
    let total: f64 = r.iter().sum();
    let g = (beta * (ds.count(NORMAL) - min.len()) as f64).round() as usize;
    let exact: Vec<f64> = r.iter().map(|x| x / total * g as f64).collect();
    let mut q: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let left = g - q.iter().sum::<usize>();
    let mut idx: Vec<usize> = (0..q.len()).collect();
    idx.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a].fract(), exact[b].fract());
        fb.partial_cmp(&fa)
            .unwrap()
            .then(r[b].partial_cmp(&r[a]).unwrap())
            .then(a.cmp(&b))
    });
    for &i in &idx[..left] {
        q[i] += 1;
    }
    q
}

/// Cross-class mutual nearest-neighbour pairs found by exhaustive scan.
pub fn tomek_links_by_scan(ds: &Dataset) -> usize {
    let z = zscore(ds.features());
    let all: Vec<usize> = (0..ds.n()).collect();
    let nn: Vec<usize> = (0..ds.n()).map(|i| brute_knn(&z, i, 1, &all)[0]).collect();
    (0..ds.n())
        .filter(|&a| nn[a] > a && nn[nn[a]] == a && ds.label(a) != ds.label(nn[a]))
        .count()
}

/// Rows of the pre-edit set whose removal by ENN disagrees with a
/// brute-force majority vote of their k neighbours.
pub fn enn_disagreements(ds: &Dataset, cfg: &OversampleConfig, seed: u64) -> usize {
    let pre = smote(ds, cfg, seed).unwrap().to_dataset().unwrap();
    let edited = smote_enn(ds, cfg, seed).unwrap();
    let mut kept = vec![false; pre.n()];
    for &i in &edited.kept_base {
        kept[i] = true;
    }
    for &s in &edited.kept_synthetic {
        kept[ds.n() + s] = true;
    }
    let z = zscore(pre.features());
    let all: Vec<usize> = (0..pre.n()).collect();
    (0..pre.n())
        .filter(|&i| {
            let wrong = brute_knn(&z, i, cfg.k, &all)
                .iter()
                .filter(|&&j| pre.label(j) != pre.label(i))
                .count();
            kept[i] == (2 * wrong > cfg.k)
        })
        .count()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect(),
    )
    .unwrap()
}

/// Loss `Σ R ⊙ out + ½ Σ out²`; its gradient with respect to the output is `R + out`.
fn probe_loss(net: &FeedforwardNet, x: &Matrix, r: &Matrix) -> f64 {
    let out = net.predict(x).unwrap();
    out.as_slice()
        .iter()
        .zip(r.as_slice())
        .map(|(o, w)| w * o + 0.5 * o * o)
        .sum()
}

pub fn gradient_check(sizes: &[usize], act: OutputActivation, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = FeedforwardNet::new(sizes, act, &mut rng).unwrap();
    // Non-zero biases so every bias gradient is exercised.
    let mut p = net.params_flat();
    for v in &mut p {
        *v += rng.random_range(-0.1..0.1);
    }
    net.set_params_flat(&p).unwrap();
    let b = rng.random_range(2..6);
    let x = random_matrix(b, sizes[0], &mut rng);
    let r = random_matrix(b, *sizes.last().unwrap(), &mut rng);
    let cache = net.forward(&x).unwrap();
    let mut g = r.clone();
    for (gv, o) in g.as_mut_slice().iter_mut().zip(cache.output().as_slice()) {
        *gv += o;
    }
    let analytic = net.backward(&cache, &g, GradWrt::Output).unwrap().flat();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] += h;
        net.set_params_flat(&q).unwrap();
        let up = probe_loss(&net, &x, &r);
        q[k] -= 2.0 * h;
        net.set_params_flat(&q).unwrap();
        let down = probe_loss(&net, &x, &r);
        let fd = (up - down) / (2.0 * h);
        let scale = fd.abs().max(analytic[k].abs());
        if scale > 1e-8 {
            worst = worst.max((fd - analytic[k]).abs() / scale);
        }
    }
    worst
}
