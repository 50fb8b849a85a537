use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smctrack_core::evaluation::{
    clear_mot_evaluate, compute_idf1, compute_mota, compute_mt_ml, evaluate, idf1_from_counts, GroundTruthEntry,
};
use smctrack_core::oracle;
use smctrack_core::selfcheck::random_identity_case;
use smctrack_core::synth::{generate_scenario, random_scenario, RandomScenarioParams};
use smctrack_core::{BoundingBox, Error};

fn e(frame: u32, id: i64, x: f64) -> GroundTruthEntry {
    GroundTruthEntry { frame, id, bbox: BoundingBox::new(x, 0.0, 10.0, 10.0).unwrap() }
}

#[test]
fn mota_reference_values() {
    assert_eq!(compute_mota(0, 0, 0, 100).unwrap(), 1.0);
    assert_eq!(compute_mota(50, 50, 10, 100).unwrap(), -0.1);
    assert_eq!(compute_mota(100, 0, 0, 100).unwrap(), 0.0);
    assert!(matches!(compute_mota(0, 0, 0, 0), Err(Error::UndefinedMetric(_))));
}

#[test]
fn three_frame_swap_counts_two_switches() {
    let gt = vec![e(1, 1, 0.0), e(1, 2, 50.0), e(2, 1, 0.0), e(2, 2, 50.0), e(3, 1, 0.0), e(3, 2, 50.0)];
    let res = vec![e(1, 7, 0.0), e(1, 8, 50.0), e(2, 8, 0.0), e(2, 7, 50.0), e(3, 8, 0.0), e(3, 7, 50.0)];
    let t = clear_mot_evaluate(&gt, &res, 0.5).unwrap();
    assert_eq!((t.fp, t.fn_, t.idsw, t.gt), (0, 0, 2, 6));
}

#[test]
fn half_swapped_idf1_matches_both_mappings() {
    // Ids swap after frame 2 of 4.
    let gt: Vec<_> = (1..=4).flat_map(|f| [e(f, 1, 0.0), e(f, 2, 50.0)]).collect();
    let res: Vec<_> = (1..=4)
        .flat_map(|f| if f <= 2 { [e(f, 7, 0.0), e(f, 8, 50.0)] } else { [e(f, 8, 0.0), e(f, 7, 50.0)] })
        .collect();
    let s = compute_idf1(&gt, &res, 0.5).unwrap();
    assert_eq!(s.idtp, oracle::brute_force_idtp(&gt, &res, 0.5));
    assert_eq!((s.idtp, s.idfp, s.idfn), (4, 4, 4));
    assert_eq!(s.idf1, 0.5);
}

#[test]
fn empty_results_are_a_null_tracker() {
    let gt = vec![e(1, 1, 0.0), e(2, 1, 0.0)];
    let r = evaluate(&gt, &[], 0.5).unwrap();
    assert_eq!((r.mota, r.idf1, r.mt, r.ml, r.fn_), (0.0, 0.0, 0.0, 1.0, 2));
}

#[test]
fn nine_of_ten_frames_is_mostly_tracked() {
    let gt: Vec<_> = (1..=10).map(|f| e(f, 1, 0.0)).collect();
    let res: Vec<_> = (1..=9).map(|f| e(f, 1, 0.0)).collect();
    assert_eq!(compute_mt_ml(&gt, &res, 0.5).unwrap(), (1.0, 0.0));
}

#[test]
fn deleting_a_switched_box_can_raise_mota() {
    // Ids 1, 2, 1 on one target: the middle box is matched but switches.
    let gt = vec![e(1, 1, 0.0), e(2, 1, 0.0), e(3, 1, 0.0)];
    let with = vec![e(1, 1, 0.0), e(2, 2, 0.0), e(3, 1, 0.0)];
    let without = vec![e(1, 1, 0.0), e(3, 1, 0.0)];
    let a = evaluate(&gt, &with, 0.5).unwrap();
    let b = evaluate(&gt, &without, 0.5).unwrap();
    assert_eq!((a.idsw, b.idsw), (2, 0));
    assert!(b.mota > a.mota);
}

/// Targets on a sparse grid; result boxes are jittered copies whose id
/// occasionally flips between two variants, plus far-off false positives.
fn unambiguous_case(seed: u64) -> (Vec<GroundTruthEntry>, Vec<GroundTruthEntry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = rng.random_range(1..=5);
    let frames = rng.random_range(1..=12);
    let (mut gt, mut res) = (Vec::new(), Vec::new());
    let mut variant = vec![0i64; ids];
    for f in 1..=frames {
        for (i, v) in variant.iter_mut().enumerate() {
            if rng.random::<f64>() < 0.2 {
                continue;
            }
            let x = 100.0 * i as f64;
            gt.push(e(f, i as i64 + 1, x));
            if rng.random::<f64>() < 0.15 {
                *v = 1 - *v;
            }
            if rng.random::<f64>() < 0.8 {
                let bbox = BoundingBox::new(x + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 10.0, 10.0).unwrap();
                res.push(GroundTruthEntry { frame: f, id: 10 * (i as i64 + 1) + *v, bbox });
            }
        }
        for k in 0..rng.random_range(0..3) {
            res.push(e(f, 1000 + k, 5000.0 + 50.0 * k as f64));
        }
    }
    (gt, res)
}

/// Indices of result boxes that match a target without switching its id.
fn correct_boxes(gt: &[GroundTruthEntry], res: &[GroundTruthEntry]) -> Vec<usize> {
    let mut last: HashMap<i64, i64> = HashMap::new();
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..res.len()).collect();
    order.sort_by_key(|&j| res[j].frame);
    for j in order {
        let r = &res[j];
        let Some(g) = gt.iter().find(|g| g.frame == r.frame && smctrack_core::iou(&g.bbox, &r.bbox) >= 0.5) else {
            continue;
        };
        if last.get(&g.id).is_none_or(|&p| p == r.id) {
            out.push(j);
        }
        last.insert(g.id, r.id);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn deleting_a_correct_box_never_raises_mota(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (gt, res) = unambiguous_case(seed);
        prop_assume!(!gt.is_empty());
        let correct = correct_boxes(&gt, &res);
        prop_assume!(!correct.is_empty());
        let drop = correct[pick.index(correct.len())];
        let mut fewer = res.clone();
        fewer.remove(drop);
        let before = evaluate(&gt, &res, 0.5).unwrap();
        let after = evaluate(&gt, &fewer, 0.5).unwrap();
        prop_assert!(after.mota <= before.mota, "{} -> {}", before.mota, after.mota);
        prop_assert_eq!(after.fn_, before.fn_ + 1);
    }

    #[test]
    fn idf1_mapping_equals_brute_force(seed in any::<u64>()) {
        let (gt, res) = random_identity_case(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(compute_idf1(&gt, &res, 0.5).unwrap().idtp, oracle::brute_force_idtp(&gt, &res, 0.5));
    }

    #[test]
    fn report_fields_reproduce_scores(seed in any::<u64>()) {
        let (gt, res) = unambiguous_case(seed);
        prop_assume!(!gt.is_empty());
        let r = evaluate(&gt, &res, 0.5).unwrap();
        prop_assert_eq!(r.mota, compute_mota(r.fn_, r.fp, r.idsw, r.gt).unwrap());
        prop_assert_eq!(r.idf1, idf1_from_counts(r.idtp, r.idfp, r.idfn).unwrap());
        prop_assert_eq!(r.idtp + r.idfn, r.gt);
        prop_assert_eq!(r.idtp + r.idfp, res.len() as u64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn self_evaluation_is_perfect(seed in any::<u64>(), ids in 1usize..8) {
        let spec = random_scenario(&RandomScenarioParams { identities: ids, frames: 40, seed, staggered: true, ..Default::default() });
        let gt = generate_scenario(&spec).unwrap().ground_truth;
        let r = evaluate(&gt, &gt, 0.5).unwrap();
        prop_assert_eq!((r.mota, r.idf1, r.idsw, r.mt, r.ml), (1.0, 1.0, 0, 1.0, 0.0));
    }
}
