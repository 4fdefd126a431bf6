use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A named parameter matrix with its gradient and Adam moments.
#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
    m: Array2<f64>,
    v: Array2<f64>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Array2<f64>) -> Self {
        let dim = value.raw_dim();
        Param {
            name: name.into(),
            grad: Array2::zeros(dim),
            m: Array2::zeros(dim),
            v: Array2::zeros(dim),
            value,
        }
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Param::new(name, Array2::zeros((rows, cols)))
    }

    /// Glorot-uniform initialization for a `fan_in × fan_out` weight.
    pub fn glorot<R: Rng>(name: impl Into<String>, rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        Param::uniform(name, rows, cols, limit, rng)
    }

    pub fn uniform<R: Rng>(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        limit: f64,
        rng: &mut R,
    ) -> Self {
        let value = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit));
        Param::new(name, value)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Rounds every value to the nearest `f32`, the precision models are
    /// stored in.
    pub fn round_to_f32(&mut self) {
        self.value.mapv_inplace(|v| v as f32 as f64);
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.dim()
    }
}

/// Access to every trainable parameter of a model, in a fixed order.
pub trait HasParams {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn round_to_f32(&mut self) {
        for p in self.params_mut() {
            p.round_to_f32();
        }
    }

    fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global L2 norm the gradient is clipped to.
    pub grad_clip: f64,
    pub dropout: f64,
    /// Training segments per update.
    pub batch_size: usize,
    pub epochs: usize,
    /// Consecutive sentences per training segment.
    pub segment_sentences: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            grad_clip: 10.0,
            dropout: 0.1,
            batch_size: 4,
            epochs: 20,
            segment_sentences: 4,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    clip: f64,
    t: i32,
}

impl Adam {
    pub fn new(config: &TrainConfig) -> Self {
        Adam {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            clip: config.grad_clip,
            t: 0,
        }
    }

    /// Clips the gradient, applies one update and clears the gradients.
    /// Returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut [&mut Param]) -> f64 {
        let norm = params
            .iter()
            .map(|p| p.grad.iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let scale = if self.clip > 0.0 && norm > self.clip {
            self.clip / norm
        } else {
            1.0
        };
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.epsilon);
        for p in params.iter_mut() {
            let Param {
                value, grad, m, v, ..
            } = &mut **p;
            ndarray::Zip::from(value)
                .and(grad)
                .and(m)
                .and(v)
                .for_each(|w, g, m, v| {
                    let g = *g * scale;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
            p.zero_grad();
        }
        norm
    }
}
