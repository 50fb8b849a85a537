//! Toy Siamese training: MSE between pair similarity and a 0/1 label,
//! minimized by full-batch gradient descent with cosine-annealed step size.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::attention::{forward, AttentionParams, ForwardCache};
use super::slicing::{SliceSet, SLICE_COUNT};

/// Gradient of a scalar loss with respect to every [`AttentionParams`] tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub w_q: [DMatrix<f64>; SLICE_COUNT],
    pub w_k: [DMatrix<f64>; SLICE_COUNT],
    pub w_v: [DMatrix<f64>; SLICE_COUNT],
    pub w_fc: DMatrix<f64>,
}

impl ParamGradients {
    fn zeros_like(p: &AttentionParams) -> Self {
        let z = |m: &DMatrix<f64>| DMatrix::zeros(m.nrows(), m.ncols());
        Self {
            w_q: std::array::from_fn(|i| z(&p.w_q[i])),
            w_k: std::array::from_fn(|i| z(&p.w_k[i])),
            w_v: std::array::from_fn(|i| z(&p.w_v[i])),
            w_fc: z(&p.w_fc),
        }
    }

    /// Tensors in the same order as the parameter tensors they belong to.
    pub fn tensors(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.w_q
            .iter()
            .chain(&self.w_k)
            .chain(&self.w_v)
            .chain(std::iter::once(&self.w_fc))
    }
}

/// Accumulates `dL/dparams` given `dL/d(embedding)` for one input.
#[allow(clippy::needless_range_loop)]
fn backward(
    cache: &ForwardCache,
    slices: &SliceSet,
    params: &AttentionParams,
    grad_embedding: &DVector<f64>,
    grads: &mut ParamGradients,
) {
    let x = slices.slices();
    let dk = params.key_dim();
    let tokens = slices.tokens() as f64;
    let scale = 1.0 / (dk as f64).sqrt();

    // e = z / |z|  =>  dz = (g - e (e·g)) / |z|
    let e = &cache.embedding;
    let grad_z = (grad_embedding - e * e.dot(grad_embedding)) / cache.pre_norm.norm();
    grads.w_fc += &grad_z * cache.pooled.transpose();
    let grad_pooled = params.w_fc.transpose() * &grad_z;

    let mut grad_q: [DMatrix<f64>; SLICE_COUNT] =
        std::array::from_fn(|i| DMatrix::zeros(cache.q[i].nrows(), dk));
    let mut grad_k = grad_q.clone();
    let mut grad_v = grad_q.clone();

    for i in 0..SLICE_COUNT {
        // Mean pooling spreads the slice gradient evenly over tokens.
        let g_row = grad_pooled.rows(i * dk, dk).transpose() / tokens;
        let grad_out = DMatrix::from_fn(cache.q[i].nrows(), dk, |_, c| g_row[c]);
        for j in 0..SLICE_COUNT {
            let p = &cache.probs[i][j];
            grad_v[j] += p.transpose() * &grad_out;
            let grad_p = &grad_out * cache.v[j].transpose();
            let mut grad_s = p.component_mul(&grad_p);
            for (r, mut row) in grad_s.row_iter_mut().enumerate() {
                let dot = row.sum();
                for (c, val) in row.iter_mut().enumerate() {
                    *val -= p[(r, c)] * dot;
                }
            }
            grad_q[i] += &grad_s * &cache.k[j] * scale;
            grad_k[j] += grad_s.transpose() * &cache.q[i] * scale;
        }
    }

    for i in 0..SLICE_COUNT {
        let xt = x[i].transpose();
        grads.w_q[i] += &xt * &grad_q[i];
        grads.w_k[i] += &xt * &grad_k[i];
        grads.w_v[i] += &xt * &grad_v[i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPair {
    pub a: usize,
    pub b: usize,
    /// Target similarity: 1 for the same identity, 0 otherwise.
    pub label: f64,
}

/// Training inputs: each distinct crop is sliced once, pairs index into them.
#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub inputs: Vec<SliceSet>,
    pub pairs: Vec<LabeledPair>,
}

impl PairSet {
    fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Config("training needs at least one pair".into()));
        }
        let n = self.inputs.len();
        if let Some(p) = self.pairs.iter().find(|p| p.a >= n || p.b >= n) {
            return Err(Error::Shape(format!(
                "pair ({}, {}) references an input beyond {n}",
                p.a, p.b
            )));
        }
        Ok(())
    }
}

/// Mean squared error over all pairs, with its gradient.
pub fn loss_and_gradients(set: &PairSet, params: &AttentionParams) -> Result<(f64, ParamGradients)> {
    set.validate()?;
    let caches = set
        .inputs
        .iter()
        .map(|s| forward(s, params))
        .collect::<Result<Vec<_>>>()?;

    let n = set.pairs.len() as f64;
    let dim = params.embedding_dim();
    let mut grad_e = vec![DVector::zeros(dim); set.inputs.len()];
    let mut loss = 0.0;
    for pair in &set.pairs {
        let (ea, eb) = (&caches[pair.a].embedding, &caches[pair.b].embedding);
        let residual = ea.dot(eb) - pair.label;
        loss += residual * residual / n;
        let coeff = 2.0 * residual / n;
        grad_e[pair.a] += eb * coeff;
        grad_e[pair.b] += ea * coeff;
    }

    let mut grads = ParamGradients::zeros_like(params);
    for (idx, cache) in caches.iter().enumerate() {
        if grad_e[idx].iter().any(|g| *g != 0.0) {
            backward(cache, &set.inputs[idx], params, &grad_e[idx], &mut grads);
        }
    }
    Ok((loss, grads))
}

pub fn pair_loss(set: &PairSet, params: &AttentionParams) -> Result<f64> {
    set.validate()?;
    let embeddings = set
        .inputs
        .iter()
        .map(|s| forward(s, params).map(|c| c.embedding))
        .collect::<Result<Vec<_>>>()?;
    let n = set.pairs.len() as f64;
    Ok(set
        .pairs
        .iter()
        .map(|p| (embeddings[p.a].dot(&embeddings[p.b]) - p.label).powi(2) / n)
        .sum())
}

/// Cosine annealing from `initial` toward zero over `epochs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineSchedule {
    pub initial: f64,
}

impl Default for CosineSchedule {
    fn default() -> Self {
        Self { initial: 6.5e-3 }
    }
}

impl CosineSchedule {
    pub fn rate(&self, epoch: usize, epochs: usize) -> f64 {
        if epochs == 0 {
            return self.initial;
        }
        0.5 * self.initial * (1.0 + (PI * epoch as f64 / epochs as f64).cos())
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub params: AttentionParams,
    /// Loss before each epoch's step, followed by the final loss.
    pub losses: Vec<f64>,
}

pub fn train_siamese_toy(
    set: &PairSet,
    mut params: AttentionParams,
    epochs: usize,
    schedule: CosineSchedule,
) -> Result<TrainingOutcome> {
    let mut losses = Vec::with_capacity(epochs + 1);
    for epoch in 0..epochs {
        let (loss, grads) = loss_and_gradients(set, &params)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        losses.push(loss);
        let lr = schedule.rate(epoch, epochs);
        if lr != 0.0 {
            for (w, g) in params.tensors_mut().zip(grads.tensors()) {
                *w -= g * lr;
            }
            if params.tensors().any(|w| w.iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { epoch });
            }
        }
    }
    let final_loss = pair_loss(set, &params)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence { epoch: epochs });
    }
    losses.push(final_loss);
    Ok(TrainingOutcome { params, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_set(seed: u64) -> PairSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..3)
            .map(|_| {
                SliceSet::new(std::array::from_fn(|k| {
                    DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0) + (k + 1) as f64)
                }))
                .unwrap()
            })
            .collect();
        PairSet {
            inputs,
            pairs: vec![
                LabeledPair { a: 0, b: 1, label: 1.0 },
                LabeledPair { a: 0, b: 2, label: 0.0 },
                LabeledPair { a: 1, b: 2, label: 0.0 },
            ],
        }
    }

    #[test]
    fn schedule_anneals_to_zero() {
        let s = CosineSchedule::default();
        assert_eq!(s.rate(0, 10), 6.5e-3);
        assert!((s.rate(5, 10) - 3.25e-3).abs() < 1e-15);
        assert!(s.rate(10, 10).abs() < 1e-18);
    }

    #[test]
    fn zero_rate_leaves_params_untouched() {
        let set = tiny_set(1);
        let params = AttentionParams::seeded(3, 4, 6, 9);
        let out = train_siamese_toy(&set, params.clone(), 5, CosineSchedule { initial: 0.0 }).unwrap();
        assert_eq!(out.params, params);
    }

    #[test]
    fn reported_loss_matches_forward_loss() {
        let set = tiny_set(2);
        let params = AttentionParams::seeded(3, 4, 6, 3);
        let (loss, _) = loss_and_gradients(&set, &params).unwrap();
        assert!((loss - pair_loss(&set, &params).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn divergence_is_reported() {
        let set = tiny_set(3);
        let params = AttentionParams::seeded(3, 4, 6, 3);
        let out = train_siamese_toy(&set, params, 3, CosineSchedule { initial: f64::INFINITY });
        assert!(matches!(out, Err(Error::Divergence { epoch: 0 })));
    }

    #[test]
    fn rejects_dangling_pair_indices() {
        let mut set = tiny_set(4);
        set.pairs.push(LabeledPair { a: 0, b: 9, label: 1.0 });
        assert!(loss_and_gradients(&set, &AttentionParams::seeded(3, 4, 6, 0)).is_err());
    }
}
