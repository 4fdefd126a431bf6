//! Dense building blocks shared by the encoder and the prediction heads.

use ndarray::{s, Array2, ArrayView2, Axis};

/// Concatenates each row with its left and right neighbours (zero padded),
/// turning `n × w` into `n × 3w`.
pub fn window(h: &Array2<f64>) -> Array2<f64> {
    let (n, w) = h.dim();
    let mut out = Array2::zeros((n, 3 * w));
    out.slice_mut(s![.., w..2 * w]).assign(h);
    if n > 1 {
        out.slice_mut(s![1.., ..w]).assign(&h.slice(s![..n - 1, ..]));
        out.slice_mut(s![..n - 1, 2 * w..]).assign(&h.slice(s![1.., ..]));
    }
    out
}

/// Gradient of [`window`].
pub fn unwindow(d: &Array2<f64>, w: usize) -> Array2<f64> {
    let n = d.nrows();
    let mut out = d.slice(s![.., w..2 * w]).to_owned();
    if n > 1 {
        let mut head = out.slice_mut(s![..n - 1, ..]);
        head += &d.slice(s![1.., ..w]);
        let mut tail = out.slice_mut(s![1.., ..]);
        tail += &d.slice(s![..n - 1, 2 * w..]);
    }
    out
}

/// Elementwise maximum over groups of `pieces` adjacent columns. Returns the
/// pooled matrix and the winning piece of every output cell.
pub fn maxout(z: &Array2<f64>, pieces: usize) -> (Array2<f64>, Vec<u8>) {
    let (n, cols) = z.dim();
    let units = cols / pieces;
    let mut out = Array2::zeros((n, units));
    let mut which = vec![0u8; n * units];
    for (i, row) in z.outer_iter().enumerate() {
        let row = row.as_slice().expect("contiguous rows");
        for j in 0..units {
            let group = &row[j * pieces..(j + 1) * pieces];
            let mut best = 0;
            for p in 1..pieces {
                if group[p] > group[best] {
                    best = p;
                }
            }
            out[[i, j]] = group[best];
            which[i * units + j] = best as u8;
        }
    }
    (out, which)
}

/// Gradient of [`maxout`].
pub fn maxout_backward(d: &Array2<f64>, which: &[u8], pieces: usize) -> Array2<f64> {
    let (n, units) = d.dim();
    let mut out = Array2::zeros((n, units * pieces));
    for i in 0..n {
        for j in 0..units {
            out[[i, j * pieces + which[i * units + j] as usize]] = d[[i, j]];
        }
    }
    out
}

/// `x · w + b` with `b` a single row.
pub fn affine(x: &ArrayView2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = x.dot(w);
    out += b;
    out
}

/// Column sums as a `1 × k` row.
pub fn sum_rows(d: &Array2<f64>) -> Array2<f64> {
    d.sum_axis(Axis(0)).insert_axis(Axis(0))
}

/// Softmax cross-entropy per row. Rows without a target contribute nothing;
/// columns masked `false` are excluded from the normalization. Returns the
/// summed loss and `∂loss/∂logits` for that sum.
pub fn softmax_xent(
    logits: &Array2<f64>,
    targets: &[Option<usize>],
    mask: Option<&[Vec<bool>]>,
) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for (i, row) in logits.outer_iter().enumerate() {
        let Some(target) = targets[i] else { continue };
        let allowed = |k: usize| mask.is_none_or(|m| m[i][k]);
        let max = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| allowed(k))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (k, &v) in row.iter().enumerate() {
            if allowed(k) {
                let e = (v - max).exp();
                grad[[i, k]] = e;
                total += e;
            }
        }
        for k in 0..row.len() {
            grad[[i, k]] /= total;
        }
        loss -= grad[[i, target]].ln();
        grad[[i, target]] -= 1.0;
    }
    (loss, grad)
}

/// Index of the largest entry among the allowed ones.
pub fn argmax(row: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in row.iter().enumerate() {
        if allowed(k) && best.is_none_or(|b| v > row[b]) {
            best = Some(k);
        }
    }
    best
}
