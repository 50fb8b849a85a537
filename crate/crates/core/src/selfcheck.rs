//! Built-in oracle suites, runnable from the command line.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appearance::{attention_weights, qkv_attention};
use crate::assignment::hungarian_solve;
use crate::evaluation::{clear_mot_evaluate, compute_idf1, compute_mota, evaluate, GroundTruthEntry};
use crate::geometry::BoundingBox;
use crate::oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, failures: Vec<String>, ok_detail: String) -> SuiteOutcome {
    SuiteOutcome {
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() { ok_detail } else { failures.join("; ") },
    }
}

fn hungarian_suite() -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut failures = Vec::new();
    let cases = 300;
    for case in 0..cases {
        let cost = oracle::random_cost_matrix(&mut rng, 6, if case % 2 == 0 { 0.0 } else { 0.2 });
        let cap = if case % 3 == 0 { 0.5 } else { f64::INFINITY };
        let res = hungarian_solve(&cost, cap);
        let (n, best) = oracle::brute_force_assignment(&cost, cap);
        if res.matches.len() != n || (res.total_cost(&cost) - best).abs() > 1e-9 {
            failures.push(format!("case {case}: got {} / {}, expected {n} / {best}", res.matches.len(), res.total_cost(&cost)));
        }
    }
    outcome("hungarian-brute-force", failures, format!("{cases} matrices"))
}

fn attention_suite() -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa77e);
    let mut failures = Vec::new();
    let mut worst_sum: f64 = 0.0;
    let mut worst_diff: f64 = 0.0;
    for case in 0..100 {
        let (n, m, d) = (rng.random_range(1..8), rng.random_range(1..8), rng.random_range(1..9));
        let mut rand = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random_range(-3.0..3.0));
        let (q, k, v) = (rand(n, d), rand(m, d), rand(m, d));
        let sums = attention_weights(&q, &k).column_sum();
        let sum_err = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        let diff = (qkv_attention(&q, &k, &v) - oracle::direct_attention(&q, &k, &v)).amax();
        worst_sum = worst_sum.max(sum_err);
        worst_diff = worst_diff.max(diff);
        if sum_err >= 1e-9 || diff >= 1e-10 {
            failures.push(format!("case {case}: row-sum error {sum_err:e}, output difference {diff:e}"));
        }
    }
    outcome(
        "attention",
        failures,
        format!("max row-sum error {worst_sum:.1e}, max difference {worst_diff:.1e}"),
    )
}

fn gradient_suite() -> SuiteOutcome {
    let (set, params) = oracle::gradient_check_instance(7);
    match oracle::max_gradient_relative_error(&set, &params, 1e-5) {
        Ok(err) if err < 1e-3 => outcome("gradient-check", vec![], format!("max relative error {err:.2e}")),
        Ok(err) => outcome("gradient-check", vec![format!("max relative error {err:.2e}")], String::new()),
        Err(e) => outcome("gradient-check", vec![e.to_string()], String::new()),
    }
}

fn entry(frame: u32, id: i64, left: f64) -> GroundTruthEntry {
    GroundTruthEntry {
        frame,
        id,
        bbox: BoundingBox::new(left, 0.0, 10.0, 10.0).expect("positive size"),
    }
}

fn metrics_suite() -> SuiteOutcome {
    let mut failures = Vec::new();
    let mut check = |label: &str, ok: bool| {
        if !ok {
            failures.push(label.to_string());
        }
    };
    check("MOTA(0,0,0,100) = 1", compute_mota(0, 0, 0, 100).ok() == Some(1.0));
    check("MOTA(50,50,10,100) = -0.1", compute_mota(50, 50, 10, 100).ok() == Some(-0.1));
    check("MOTA(100,0,0,100) = 0", compute_mota(100, 0, 0, 100).ok() == Some(0.0));

    let gt = vec![entry(1, 1, 0.0), entry(1, 2, 50.0), entry(2, 1, 0.0), entry(2, 2, 50.0), entry(3, 1, 0.0), entry(3, 2, 50.0)];
    let swapped = vec![entry(1, 7, 0.0), entry(1, 8, 50.0), entry(2, 8, 0.0), entry(2, 7, 50.0), entry(3, 8, 0.0), entry(3, 7, 50.0)];
    check("swap gives IDSW = 2", clear_mot_evaluate(&gt, &swapped, 0.5).is_ok_and(|t| t.idsw == 2));
    check(
        "self evaluation is perfect",
        evaluate(&gt, &gt, 0.5).is_ok_and(|r| r.mota == 1.0 && r.idf1 == 1.0 && r.idsw == 0),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0x1df1);
    for case in 0..50 {
        let (gt, res) = random_identity_case(&mut rng);
        let fast = compute_idf1(&gt, &res, 0.5).map(|s| s.idtp).ok();
        let slow = oracle::brute_force_idtp(&gt, &res, 0.5);
        check(&format!("IDF1 mapping case {case}"), fast == Some(slow));
    }
    outcome("metrics", failures, "hand cases and 50 identity mappings".into())
}

/// Up to four gt identities on fixed lanes; results relabel them at random
/// and drop some boxes.
pub fn random_identity_case(rng: &mut impl Rng) -> (Vec<GroundTruthEntry>, Vec<GroundTruthEntry>) {
    let ids = rng.random_range(1..=4);
    let frames = rng.random_range(1..=8);
    let mut gt = Vec::new();
    let mut res = Vec::new();
    for f in 1..=frames {
        let mut used = Vec::new();
        for g in 0..ids {
            let lane = g as f64 * 50.0;
            gt.push(entry(f, g + 1, lane));
            if rng.random::<f64>() < 0.8 {
                let mut rid = rng.random_range(1..=5);
                while used.contains(&rid) {
                    rid = rng.random_range(1..=5);
                }
                used.push(rid);
                res.push(entry(f, rid, lane + rng.random_range(0.0..4.0)));
            }
        }
    }
    (gt, res)
}

pub fn run_selfcheck() -> Vec<SuiteOutcome> {
    vec![hungarian_suite(), attention_suite(), gradient_suite(), metrics_suite()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for s in run_selfcheck() {
            assert!(s.passed, "{}: {}", s.name, s.detail);
        }
    }
}
