//! Finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use super::param::HasParams;

pub const STEP: f64 = 1e-5;

/// Compares the gradients accumulated by `loss` against central differences
/// on at most `max_checks` parameters and returns the largest relative error
/// `|a − n| / max(|a|, |n|, 1e-6)`.
///
/// `loss` must compute the loss of `model` and accumulate its gradients; it
/// must be deterministic.
pub fn gradient_check<M, F, R>(model: &mut M, mut loss: F, max_checks: usize, rng: &mut R) -> f64
where
    M: HasParams,
    F: FnMut(&mut M) -> f64,
    R: Rng,
{
    model.zero_grads();
    loss(model);
    // (param index, flat index, analytic gradient)
    let mut nonzero = Vec::new();
    let mut zero = Vec::new();
    for (p, param) in model.params().iter().enumerate() {
        for (i, &g) in param.grad.iter().enumerate() {
            if g != 0.0 {
                nonzero.push((p, i, g));
            } else {
                zero.push((p, i, g));
            }
        }
    }
    // Mostly parameters that receive gradient, plus some that should not.
    let n_nonzero = nonzero.len().min(max_checks * 9 / 10);
    let n_zero = zero.len().min(max_checks - n_nonzero);
    let mut chosen: Vec<_> = sample(rng, nonzero.len(), n_nonzero)
        .into_iter()
        .map(|i| nonzero[i])
        .collect();
    chosen.extend(sample(rng, zero.len(), n_zero).into_iter().map(|i| zero[i]));

    let mut worst: f64 = 0.0;
    for (p, i, analytic) in chosen {
        let original = flat_get(model, p, i);
        flat_set(model, p, i, original + STEP);
        let plus = loss(model);
        flat_set(model, p, i, original - STEP);
        let minus = loss(model);
        flat_set(model, p, i, original);
        let numeric = (plus - minus) / (2.0 * STEP);
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    model.zero_grads();
    worst
}

fn flat_get<M: HasParams>(model: &M, p: usize, i: usize) -> f64 {
    let params = model.params();
    let value = &params[p].value;
    value[[i / value.ncols(), i % value.ncols()]]
}

fn flat_set<M: HasParams>(model: &mut M, p: usize, i: usize, v: f64) {
    let mut params = model.params_mut();
    let value = &mut params[p].value;
    let cols = value.ncols();
    value[[i / cols, i % cols]] = v;
}
