use ndarray::Array2;

use super::ops::{affine, argmax, softmax_xent, sum_rows};
use super::param::{HasParams, Param};

/// A linear layer followed by a softmax over a frozen label inventory.
#[derive(Clone, Debug)]
pub struct SoftmaxHead {
    pub w: Param,
    pub b: Param,
    labels: Vec<String>,
}

impl SoftmaxHead {
    /// A zero-initialized head: every label starts equally likely.
    pub fn new(name: &str, width: usize, labels: Vec<String>) -> Self {
        let k = labels.len();
        SoftmaxHead {
            w: Param::zeros(format!("{}.w", name), width, k),
            b: Param::zeros(format!("{}.b", name), 1, k),
            labels,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn logits(&self, h: &Array2<f64>) -> Array2<f64> {
        affine(&h.view(), &self.w.value, &self.b.value)
    }

    /// Argmax label index per row.
    pub fn predict(&self, h: &Array2<f64>) -> Vec<usize> {
        let logits = self.logits(h);
        logits
            .outer_iter()
            .map(|row| argmax(row.as_slice().expect("contiguous rows"), |_| true).unwrap_or(0))
            .collect()
    }

    /// Summed cross-entropy over the rows with a target, scaled by `scale`.
    /// Accumulates parameter gradients and returns the loss with `∂loss/∂h`.
    pub fn loss(
        &mut self,
        h: &Array2<f64>,
        targets: &[Option<usize>],
        scale: f64,
    ) -> (f64, Array2<f64>) {
        let (loss, mut d) = softmax_xent(&self.logits(h), targets, None);
        d *= scale;
        self.w.grad += &h.t().dot(&d);
        self.b.grad += &sum_rows(&d);
        (loss * scale, d.dot(&self.w.value.t()))
    }
}

impl HasParams for SoftmaxHead {
    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
