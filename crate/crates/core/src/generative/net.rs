//! Fully connected feed-forward network with leaky-ReLU hidden layers and
//! hand-written backpropagation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Sigmoid,
    Tanh,
}

impl OutputActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            OutputActivation::Linear => z,
            OutputActivation::Sigmoid => sigmoid(z),
            OutputActivation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activated value `a` and input `z`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            OutputActivation::Linear => {
                let _ = z;
                1.0
            }
            OutputActivation::Sigmoid => a * (1.0 - a),
            OutputActivation::Tanh => 1.0 - a * a,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

#[inline]
fn leaky_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// One affine layer; `weights` is `inputs × outputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardNet {
    layers: Vec<Dense>,
    output: OutputActivation,
    /// Bumped on every parameter change; caches from older versions are stale.
    #[serde(skip)]
    version: u64,
}

/// Activations retained by [`FeedforwardNet::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("at least one layer")
    }

    /// Pre-activation values of the final layer.
    pub fn logits(&self) -> &Matrix {
        self.pre.last().expect("at least one layer")
    }
}

/// Which quantity the incoming gradient is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradWrt {
    Output,
    Logits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    /// Gradient with respect to the network input.
    pub input: Matrix,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite) && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

impl FeedforwardNet {
    /// Random network with layer widths `sizes` (input first, output last),
    /// He-uniform weights and zero biases.
    pub fn new(sizes: &[usize], output: OutputActivation, rng: &mut impl rand::Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt() / 2.0;
                let data = (0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect();
                Dense {
                    weights: Matrix::from_vec(w[0], w[1], data).expect("sized"),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(FeedforwardNet {
            layers,
            output,
            version: 0,
        })
    }

    pub fn from_layers(layers: Vec<Dense>, output: OutputActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::Shape(format!("layer {i}: bias length mismatch")));
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(Error::Shape(format!("layer {i}: input width mismatch")));
            }
        }
        Ok(FeedforwardNet {
            layers,
            output,
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_size()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "{} parameters supplied, network has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.rows() * l.weights.cols();
            l.weights.as_mut_slice().copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        self.version += 1;
        Ok(())
    }

    /// Applies `f(param, grad)` to every parameter in lockstep with `grads`.
    pub fn update(&mut self, grads: &Gradients, mut f: impl FnMut(usize, &mut f64, f64)) {
        let mut at = 0;
        for (l, (gw, gb)) in self.layers.iter_mut().zip(grads.weights.iter().zip(&grads.biases)) {
            for (p, &g) in l.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                f(at, p, g);
                at += 1;
            }
            for (p, &g) in l.bias.iter_mut().zip(gb) {
                f(at, p, g);
                at += 1;
            }
        }
        self.version += 1;
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardCache> {
        if batch.cols() != self.input_size() {
            return Err(Error::Shape(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_size()
            )));
        }
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { batch } else { &post[i - 1] };
            let mut z = input.matmul(&layer.weights);
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let a = if i == last {
                z.map(|v| self.output.apply(v))
            } else {
                z.map(leaky)
            };
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardCache {
            input: batch.clone(),
            pre,
            post,
            version: self.version,
        })
    }

    /// Convenience forward pass returning only the output.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        let mut cache = self.forward(batch)?;
        Ok(cache.post.pop().expect("non-empty"))
    }

    pub fn backward(&self, cache: &ForwardCache, grad: &Matrix, wrt: GradWrt) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(Error::StaleCache);
        }
        let out = cache.output();
        if grad.rows() != out.rows() || grad.cols() != out.cols() {
            return Err(Error::Shape(format!(
                "gradient is {}x{}, output is {}x{}",
                grad.rows(),
                grad.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut delta = match wrt {
            GradWrt::Logits => grad.clone(),
            GradWrt::Output => {
                let z = &cache.pre[last];
                let mut d = grad.clone();
                for ((g, &zv), &av) in d.as_mut_slice().iter_mut().zip(z.as_slice()).zip(out.as_slice()) {
                    *g *= self.output.derivative(zv, av);
                }
                d
            }
        };

        let mut weights = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut biases = vec![Vec::new(); self.layers.len()];
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            weights[i] = input.t_matmul(&delta);
            let mut gb = vec![0.0; delta.cols()];
            for r in delta.iter_rows() {
                for (a, &v) in gb.iter_mut().zip(r) {
                    *a += v;
                }
            }
            biases[i] = gb;
            let mut back = delta.matmul_t(&self.layers[i].weights);
            if i > 0 {
                for (b, &z) in back.as_mut_slice().iter_mut().zip(cache.pre[i - 1].as_slice()) {
                    *b *= leaky_grad(z);
                }
            }
            delta = back;
        }
        Ok(Gradients {
            weights,
            biases,
            input: delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    #[test]
    fn zero_net_with_logistic_output_is_half() {
        let layers = vec![
            Dense {
                weights: Matrix::zeros(3, 4),
                bias: vec![0.0; 4],
            },
            Dense {
                weights: Matrix::zeros(4, 1),
                bias: vec![0.0],
            },
        ];
        let net = FeedforwardNet::from_layers(layers, OutputActivation::Sigmoid).unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.0, 5.0, 9.0]]).unwrap();
        let out = net.predict(&x).unwrap();
        assert_eq!(out.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut w = Matrix::zeros(3, 3);
        for i in 0..3 {
            w.set(i, i, 1.0);
        }
        let net = FeedforwardNet::from_layers(
            vec![Dense {
                weights: w,
                bias: vec![0.0; 3],
            }],
            OutputActivation::Linear,
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1.5, -2.0, 3.25]]).unwrap();
        assert_eq!(net.predict(&x).unwrap(), x);
    }

    #[test]
    fn shape_and_stale_errors() {
        let mut rng = seeding::rng(1);
        let mut net = FeedforwardNet::new(&[2, 4, 1], OutputActivation::Sigmoid, &mut rng).unwrap();
        assert!(matches!(net.forward(&Matrix::zeros(1, 3)), Err(Error::Shape(_))));
        let cache = net.forward(&Matrix::zeros(2, 2)).unwrap();
        let g = Matrix::zeros(2, 1);
        assert!(net.backward(&cache, &g, GradWrt::Output).is_ok());
        let p = net.params_flat();
        net.set_params_flat(&p).unwrap();
        assert!(matches!(
            net.backward(&cache, &g, GradWrt::Output),
            Err(Error::StaleCache)
        ));
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let mut rng = seeding::rng(2);
        let net = FeedforwardNet::new(&[2, 16, 8, 1], OutputActivation::Tanh, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.3, -0.7], [1.2, 0.4]]).unwrap();
        let cache = net.forward(&x).unwrap();
        let g = net.backward(&cache, &Matrix::zeros(2, 1), GradWrt::Output).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_scale_linearly() {
        let mut rng = seeding::rng(3);
        let net = FeedforwardNet::new(&[3, 6, 2], OutputActivation::Sigmoid, &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.3, -0.7, 0.1], [1.2, 0.4, -2.0]]).unwrap();
        let cache = net.forward(&x).unwrap();
        let g1 = Matrix::from_rows(&[[0.5, -1.0], [0.25, 2.0]]).unwrap();
        let g2 = g1.map(|v| 2.0 * v);
        let a = net.backward(&cache, &g1, GradWrt::Output).unwrap().flat();
        let b = net.backward(&cache, &g2, GradWrt::Output).unwrap().flat();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn stable_scalar_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
    }
}
