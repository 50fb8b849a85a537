//! Slow, direct reference implementations used to cross-check the fast
//! paths in tests and in the self-check command.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appearance::{loss_and_gradients, pair_loss, AttentionParams, LabeledPair, PairSet, SliceSet};
use crate::assignment::{CostMatrix, INFEASIBLE};
use crate::error::Result;
use crate::evaluation::GroundTruthEntry;
use crate::geometry::iou;

/// Exhaustive search over all partial injections of rows into columns.
/// Returns the largest match count and the least total cost at that count.
pub fn brute_force_assignment(cost: &CostMatrix, max_cost: f64) -> (usize, f64) {
    fn go(r: usize, cost: &CostMatrix, cap: f64, used: &mut [bool], n: usize, sum: f64, best: &mut (usize, f64)) {
        if r == cost.rows() {
            if n > best.0 || (n == best.0 && sum < best.1) {
                *best = (n, sum);
            }
            return;
        }
        go(r + 1, cost, cap, used, n, sum, best);
        for c in 0..cost.cols() {
            let v = cost.get(r, c);
            if !used[c] && v != INFEASIBLE && v <= cap {
                used[c] = true;
                go(r + 1, cost, cap, used, n + 1, sum + v, best);
                used[c] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    go(0, cost, max_cost, &mut vec![false; cost.cols()], 0, 0.0, &mut best);
    best
}

/// Element-by-element `softmax(Q Kᵀ / √d) V`.
pub fn direct_attention(q: &DMatrix<f64>, k: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let d = q.ncols() as f64;
    let mut out = DMatrix::zeros(q.nrows(), v.ncols());
    for i in 0..q.nrows() {
        let scores: Vec<f64> = (0..k.nrows())
            .map(|j| (0..q.ncols()).map(|c| q[(i, c)] * k[(j, c)]).sum::<f64>() / d.sqrt())
            .collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let total: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            for c in 0..v.ncols() {
                out[(i, c)] += wj / total * v[(j, c)];
            }
        }
    }
    out
}

/// Central finite differences of the pair loss for every parameter entry,
/// in the tensor order `w_q.0..3, w_k.0..3, w_v.0..3, w_fc`.
pub fn finite_difference_gradients(set: &PairSet, params: &AttentionParams, step: f64) -> Result<Vec<DMatrix<f64>>> {
    let shapes: Vec<(usize, usize)> = params.tensors().map(|t| t.shape()).collect();
    let mut grads = Vec::with_capacity(shapes.len());
    let mut probe = params.clone();
    for (t, &(rows, cols)) in shapes.iter().enumerate() {
        let mut g = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let original = params.tensors().nth(t).expect("tensor index")[(r, c)];
                probe.tensors_mut().nth(t).expect("tensor index")[(r, c)] = original + step;
                let up = pair_loss(set, &probe)?;
                probe.tensors_mut().nth(t).expect("tensor index")[(r, c)] = original - step;
                let down = pair_loss(set, &probe)?;
                probe.tensors_mut().nth(t).expect("tensor index")[(r, c)] = original;
                g[(r, c)] = (up - down) / (2.0 * step);
            }
        }
        grads.push(g);
    }
    Ok(grads)
}

/// `|a - n| / max(|a|, |n|)`, or the absolute difference when both are below `floor`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < floor {
        diff
    } else {
        diff / scale
    }
}

/// Best identity-true-positive count over every one-to-one mapping between
/// ground-truth ids and result ids, by exhaustive enumeration.
pub fn brute_force_idtp(gt: &[GroundTruthEntry], results: &[GroundTruthEntry], iou_threshold: f64) -> u64 {
    let gt_ids: Vec<i64> = gt.iter().map(|e| e.id).collect::<BTreeSet<_>>().into_iter().collect();
    let res_ids: Vec<i64> = results.iter().map(|e| e.id).collect::<BTreeSet<_>>().into_iter().collect();
    let mut shared: HashMap<(i64, i64), u64> = HashMap::new();
    for g in gt {
        for r in results.iter().filter(|r| r.frame == g.frame) {
            if iou(&g.bbox, &r.bbox) >= iou_threshold {
                *shared.entry((g.id, r.id)).or_default() += 1;
            }
        }
    }
    fn go(i: usize, gt_ids: &[i64], res_ids: &[i64], used: &mut [bool], shared: &HashMap<(i64, i64), u64>) -> u64 {
        if i == gt_ids.len() {
            return 0;
        }
        let mut best = go(i + 1, gt_ids, res_ids, used, shared);
        for j in 0..res_ids.len() {
            if !used[j] {
                used[j] = true;
                let here = shared.get(&(gt_ids[i], res_ids[j])).copied().unwrap_or(0);
                best = best.max(here + go(i + 1, gt_ids, res_ids, used, shared));
                used[j] = false;
            }
        }
        best
    }
    go(0, &gt_ids, &res_ids, &mut vec![false; res_ids.len()], &shared)
}

/// Random matrix with dimensions in `1..=max_dim`; each entry is
/// [`INFEASIBLE`] with probability `infeasible`, otherwise uniform in `[0, 1)`.
pub fn random_cost_matrix(rng: &mut impl Rng, max_dim: usize, infeasible: f64) -> CostMatrix {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(1..=max_dim);
    let values = DMatrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < infeasible {
            INFEASIBLE
        } else {
            rng.random::<f64>()
        }
    });
    CostMatrix::new(values).expect("finite or infeasible entries")
}

/// Three inputs of two tokens per slice, three channels, `d_k = 4`,
/// embedding size 6, with one positive and two negative pairs.
pub fn gradient_check_instance(seed: u64) -> (PairSet, AttentionParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..3)
        .map(|_| {
            SliceSet::new(std::array::from_fn(|k| {
                DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0) + (k + 1) as f64)
            }))
            .expect("well-formed slices")
        })
        .collect();
    let set = PairSet {
        inputs,
        pairs: vec![
            LabeledPair { a: 0, b: 1, label: 1.0 },
            LabeledPair { a: 0, b: 2, label: 0.0 },
            LabeledPair { a: 1, b: 2, label: 0.0 },
        ],
    };
    (set, AttentionParams::seeded(3, 4, 6, seed))
}

/// Largest relative error between analytic and central-difference gradients.
pub fn max_gradient_relative_error(set: &PairSet, params: &AttentionParams, step: f64) -> Result<f64> {
    let (_, analytic) = loss_and_gradients(set, params)?;
    let numeric = finite_difference_gradients(set, params, step)?;
    Ok(analytic
        .tensors()
        .zip(&numeric)
        .flat_map(|(a, n)| a.iter().zip(n.iter()).map(|(x, y)| relative_error(*x, *y, 1e-8)))
        .fold(0.0, f64::max))
}
