use serde::{Deserialize, Serialize};

use super::net::{FeedforwardNet, Gradients};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    /// Heavy-ball SGD.
    Momentum {
        momentum: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Momentum { momentum: 0.9 }
    }
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// Per-network optimizer state; gradients are descended.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    step: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &FeedforwardNet) -> Self {
        let n = net.param_count();
        Optimizer {
            kind,
            lr,
            first: vec![0.0; n],
            second: match kind {
                OptimizerKind::Adam { .. } => vec![0.0; n],
                OptimizerKind::Momentum { .. } => Vec::new(),
            },
            step: 0,
        }
    }

    pub fn step(&mut self, net: &mut FeedforwardNet, grads: &Gradients) {
        self.step += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Momentum { momentum } => {
                let vel = &mut self.first;
                net.update(grads, |i, p, g| {
                    vel[i] = momentum * vel[i] - lr * g;
                    *p += vel[i];
                });
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let (m, v) = (&mut self.first, &mut self.second);
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                net.update(grads, |i, p, g| {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                    *p -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::net::{Dense, GradWrt, OutputActivation};
    use crate::matrix::Matrix;

    fn quadratic_descent(kind: OptimizerKind, lr: f64, steps: usize) -> f64 {
        // Single linear unit fitting y = 3x; loss = mean (wx - y)^2 / 2.
        let mut net = FeedforwardNet::from_layers(
            vec![Dense {
                weights: Matrix::zeros(1, 1),
                bias: vec![0.0],
            }],
            OutputActivation::Linear,
        )
        .unwrap();
        let mut opt = Optimizer::new(kind, lr, &net);
        let x = Matrix::from_rows(&[[1.0], [2.0], [-1.0]]).unwrap();
        for _ in 0..steps {
            let cache = net.forward(&x).unwrap();
            let out = cache.output();
            let g = Matrix::from_vec(
                3,
                1,
                (0..3).map(|i| (out.get(i, 0) - 3.0 * x.get(i, 0)) / 3.0).collect(),
            )
            .unwrap();
            let grads = net.backward(&cache, &g, GradWrt::Output).unwrap();
            opt.step(&mut net, &grads);
        }
        net.layers()[0].weights.get(0, 0)
    }

    #[test]
    fn both_optimizers_converge_on_a_quadratic() {
        assert!((quadratic_descent(OptimizerKind::default(), 0.05, 500) - 3.0).abs() < 1e-6);
        let w = quadratic_descent(OptimizerKind::adam(), 0.01, 3000);
        assert!((w - 3.0).abs() < 1e-2, "{w}");
    }
}
