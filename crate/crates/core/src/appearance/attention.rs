//! Scaled dot-product attention and the sliced self/cross-attention block.
//!
//! Every slice `i` projects its tokens to `Q_i`, `K_i`, `V_i` with its own
//! weights. The output of slice `i` is the sum of attention with queries from
//! `i` and keys/values from each of the four slices (`j == i` is the
//! self-attention term). Outputs are mean-pooled over tokens, concatenated
//! in slice order, mapped through a fully connected layer and L2-normalized.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::embedding::EmbeddingVector;
use super::slicing::{SliceSet, SLICE_COUNT};

/// Row-wise softmax, shifted by the row max.
pub(crate) fn softmax_rows(scores: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = scores.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Returns the output together with the attention probabilities.
pub(crate) fn attention_with_probs(
    q: &DMatrix<f64>,
    k: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let probs = softmax_rows(&((q * k.transpose()) * scale));
    debug_assert!(
        probs.row_iter().all(|r| (r.sum() - 1.0).abs() < 1e-9),
        "softmax row does not sum to 1"
    );
    (&probs * v, probs)
}

/// Attention probabilities `softmax(Q Kᵀ / √d_k)`, one row per query.
///
/// # Panics
/// If `Q` and `K` differ in column count.
pub fn attention_weights(q: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(q.ncols(), k.ncols(), "Q and K must share d_k");
    softmax_rows(&((q * k.transpose()) * (1.0 / (q.ncols() as f64).sqrt())))
}

/// `softmax(Q Kᵀ / √d_k) V` with the softmax taken over each row.
///
/// # Panics
/// If `Q` and `K` differ in column count or `K` and `V` in row count.
pub fn qkv_attention(q: &DMatrix<f64>, k: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(q.ncols(), k.ncols(), "Q and K must share d_k");
    assert_eq!(k.nrows(), v.nrows(), "K and V must have the same number of rows");
    attention_with_probs(q, k, v).0
}

/// Learnable weights of the sliced attention block and its output head.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Per-slice `channels × d_k` projections.
    pub w_q: [DMatrix<f64>; SLICE_COUNT],
    pub w_k: [DMatrix<f64>; SLICE_COUNT],
    pub w_v: [DMatrix<f64>; SLICE_COUNT],
    /// `d × (4 · d_k)` head.
    pub w_fc: DMatrix<f64>,
    /// Seed of the feature extractor these weights were trained against.
    pub extractor_seed: u64,
}

impl AttentionParams {
    pub const DEFAULT_KEY_DIM: usize = 8;
    pub const DEFAULT_EMBEDDING_DIM: usize = 128;

    /// Gaussian init scaled by `1 / √fan_in`.
    pub fn seeded(channels: usize, d_k: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize, fan_in: usize| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
        };
        let w_q = std::array::from_fn(|_| draw(channels, d_k, channels));
        let w_k = std::array::from_fn(|_| draw(channels, d_k, channels));
        let w_v = std::array::from_fn(|_| draw(channels, d_k, channels));
        let w_fc = draw(d, SLICE_COUNT * d_k, SLICE_COUNT * d_k);
        Self {
            w_q,
            w_k,
            w_v,
            w_fc,
            extractor_seed: seed,
        }
    }

    pub fn channels(&self) -> usize {
        self.w_q[0].nrows()
    }

    pub fn key_dim(&self) -> usize {
        self.w_q[0].ncols()
    }

    pub fn embedding_dim(&self) -> usize {
        self.w_fc.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (c, dk) = self.w_q[0].shape();
        if c == 0 || dk == 0 || self.w_fc.nrows() == 0 {
            return Err(Error::Shape("attention dims must be positive".into()));
        }
        let projections = self.w_q.iter().chain(&self.w_k).chain(&self.w_v);
        if projections.clone().any(|w| w.shape() != (c, dk)) {
            return Err(Error::Shape(
                "every Q/K/V projection must be channels × d_k with one shared d_k".into(),
            ));
        }
        if self.w_fc.ncols() != SLICE_COUNT * dk {
            return Err(Error::Shape(format!(
                "fc head expects {} inputs, got {}",
                SLICE_COUNT * dk,
                self.w_fc.ncols()
            )));
        }
        let finite = projections
            .chain(std::iter::once(&self.w_fc))
            .all(|w| w.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Shape("attention weights must be finite".into()));
        }
        Ok(())
    }

    /// Every weight tensor in the order `w_q.0..3, w_k.0..3, w_v.0..3, w_fc`.
    pub fn tensors(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.w_q
            .iter()
            .chain(&self.w_k)
            .chain(&self.w_v)
            .chain(std::iter::once(&self.w_fc))
    }

    pub(crate) fn tensors_mut(&mut self) -> impl Iterator<Item = &mut DMatrix<f64>> {
        self.w_q
            .iter_mut()
            .chain(&mut self.w_k)
            .chain(&mut self.w_v)
            .chain(std::iter::once(&mut self.w_fc))
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    pub q: [DMatrix<f64>; SLICE_COUNT],
    pub k: [DMatrix<f64>; SLICE_COUNT],
    pub v: [DMatrix<f64>; SLICE_COUNT],
    /// `probs[i][j]`: queries of slice `i` against keys of slice `j`.
    pub probs: [[DMatrix<f64>; SLICE_COUNT]; SLICE_COUNT],
    pub outputs: [DMatrix<f64>; SLICE_COUNT],
    pub pooled: DVector<f64>,
    pub pre_norm: DVector<f64>,
    pub embedding: DVector<f64>,
}

fn check_compatible(slices: &SliceSet, params: &AttentionParams) -> Result<()> {
    params.validate()?;
    if slices.channels() != params.channels() {
        return Err(Error::Shape(format!(
            "slices have {} channels, params expect {}",
            slices.channels(),
            params.channels()
        )));
    }
    Ok(())
}

pub(crate) fn forward(slices: &SliceSet, params: &AttentionParams) -> Result<ForwardCache> {
    check_compatible(slices, params)?;
    let x = slices.slices();
    let q: [DMatrix<f64>; SLICE_COUNT] = std::array::from_fn(|i| &x[i] * &params.w_q[i]);
    let k: [DMatrix<f64>; SLICE_COUNT] = std::array::from_fn(|i| &x[i] * &params.w_k[i]);
    let v: [DMatrix<f64>; SLICE_COUNT] = std::array::from_fn(|i| &x[i] * &params.w_v[i]);

    let dk = params.key_dim();
    let tokens = slices.tokens();
    let mut outputs: [DMatrix<f64>; SLICE_COUNT] =
        std::array::from_fn(|_| DMatrix::zeros(tokens, dk));
    let probs = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (out, p) = attention_with_probs(&q[i], &k[j], &v[j]);
            outputs[i] += out;
            p
        })
    });

    let mut pooled = DVector::zeros(SLICE_COUNT * dk);
    for (i, out) in outputs.iter().enumerate() {
        let mean = out.row_mean();
        for c in 0..dk {
            pooled[i * dk + c] = mean[c];
        }
    }
    let pre_norm = &params.w_fc * &pooled;
    let norm = pre_norm.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Shape("embedding head produced a zero or non-finite vector".into()));
    }
    let embedding = &pre_norm / norm;
    Ok(ForwardCache {
        q,
        k,
        v,
        probs,
        outputs,
        pooled,
        pre_norm,
        embedding,
    })
}

/// The four pre-concatenation slice outputs (`tokens × d_k` each).
pub fn isa_slice_outputs(
    slices: &SliceSet,
    params: &AttentionParams,
) -> Result<[DMatrix<f64>; SLICE_COUNT]> {
    Ok(forward(slices, params)?.outputs)
}

pub fn isa_forward(slices: &SliceSet, params: &AttentionParams) -> Result<EmbeddingVector> {
    let cache = forward(slices, params)?;
    EmbeddingVector::normalized(cache.embedding.iter().copied().collect())
}
