use nalgebra::DMatrix;

use crate::appearance::{cosine_similarity, multi_template_similarity, FeatureBank};
use crate::assignment::hungarian_solve;
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox, Detection, FrameObservations};
use crate::motion::{kf_initiate, kf_predict, kf_update, state_to_box, KalmanState, MotionNoiseConfig};

use super::config::TrackerConfig;
use super::fusion::StageMatrices;
use super::split::{compute_split_threshold, partition_detections};
use super::track::{Track, TrackOutput, TrackStatus};

/// All live tracks (active and lost) plus the id counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackerState {
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
}

impl TrackerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorted by id.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.last_frame
    }

    /// Number of ids handed out so far.
    pub fn ids_issued(&self) -> u64 {
        self.next_id
    }
}

/// A match made in one stage. `appearance` is the `M_a` entry used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMatch {
    pub track_id: u64,
    pub detection: usize,
    pub appearance: Option<f64>,
}

/// What happened during one [`smc_step`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub frame: u32,
    pub split_threshold: f64,
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    pub discarded: Vec<usize>,
    pub stage1: Vec<StageMatch>,
    pub stage2: Vec<StageMatch>,
    pub births: Vec<u64>,
    pub deletions: Vec<u64>,
    pub emitted: Vec<TrackOutput>,
}

fn predicted_box(state: &KalmanState) -> Option<BoundingBox> {
    state_to_box(state).ok()
}

fn stage_matrices<F>(
    tracks: &[&Track],
    boxes: &[Option<BoundingBox>],
    dets: &[&Detection],
    appearance: F,
) -> StageMatrices
where
    F: Fn(&Track, &Detection) -> Option<f64>,
{
    let motion = DMatrix::from_fn(tracks.len(), dets.len(), |i, j| match &boxes[i] {
        Some(b) => 1.0 - iou(b, &dets[j].bbox),
        None => 1.0,
    });
    let appearance = DMatrix::from_fn(tracks.len(), dets.len(), |i, j| appearance(tracks[i], dets[j]));
    StageMatrices { motion, appearance }
}

fn bank_similarity(bank: &FeatureBank, det: &Detection) -> Option<f64> {
    match &det.embedding {
        Some(e) if !bank.is_empty() => Some(multi_template_similarity(bank, e)),
        _ => None,
    }
}

fn apply_match(track: &mut Track, det: &Detection, threshold: f64, high_stage: bool, motion: &MotionNoiseConfig) {
    track.kalman = match kf_update(&track.kalman, &det.bbox, motion) {
        Ok(k) if predicted_box(&k).is_some() => k,
        _ => kf_initiate(&det.bbox, motion),
    };
    if let Some(e) = &det.embedding {
        track.bank.insert(e.clone(), det.score(), threshold);
        if high_stage {
            track.last_embedding = Some(e.clone());
        }
    }
    track.status = TrackStatus::Active;
    track.frames_since_update = 0;
    track.last_score = det.score();
}

/// Advances the tracker by one frame.
///
/// Frames must arrive in strictly increasing order. A gap of `g` frames is
/// treated as `g - 1` empty frames followed by this one.
pub fn smc_step(state: &mut TrackerState, frame: &FrameObservations, cfg: &TrackerConfig) -> Result<StepReport> {
    cfg.validate()?;
    let f = frame.frame();
    let gap = match state.last_frame {
        Some(prev) if f <= prev => return Err(Error::FrameOrder { previous: prev, got: f }),
        Some(prev) => f - prev,
        None => 1,
    };
    state.last_frame = Some(f);
    let dets = frame.detections();
    let mut report = StepReport {
        frame: f,
        ..Default::default()
    };

    // Tracks that would have run out during skipped frames.
    let skipped = gap - 1;
    state.tracks.retain(|t| {
        let expired = t.frames_since_update.saturating_add(skipped) > cfg.lost_ttl;
        if expired {
            report.deletions.push(t.id);
        }
        !expired
    });

    // Lost tracks are already in the list; predict everything.
    for t in &mut state.tracks {
        for _ in 0..gap {
            t.kalman = kf_predict(&t.kalman, &cfg.motion);
        }
    }
    let boxes: Vec<Option<BoundingBox>> = state.tracks.iter().map(|t| predicted_box(&t.kalman)).collect();

    let raw = compute_split_threshold(dets, cfg.split_mode, cfg.det_floor);
    let thres = raw.max(cfg.det_floor).min(cfg.new_track_threshold);
    let parts = partition_detections(dets, thres, cfg.det_floor);
    report.split_threshold = thres;

    let mut track_matched = vec![false; state.tracks.len()];

    // Stage I: every track against high-score detections.
    let high: Vec<&Detection> = parts.high.iter().map(|&i| &dets[i]).collect();
    let all: Vec<&Track> = state.tracks.iter().collect();
    let m1 = stage_matrices(&all, &boxes, &high, |t, d| match (&t.last_embedding, &d.embedding) {
        (Some(a), Some(b)) => Some(cosine_similarity(a, b)),
        _ => None,
    });
    let r1 = hungarian_solve(&m1.fuse(cfg), cfg.match_cost_cap);
    let mut high_matched = vec![false; high.len()];
    for &(ti, dj) in &r1.matches {
        track_matched[ti] = true;
        high_matched[dj] = true;
        report.stage1.push(StageMatch {
            track_id: state.tracks[ti].id,
            detection: parts.high[dj],
            appearance: m1.appearance[(ti, dj)],
        });
    }

    // Stage II: leftover tracks against low-score detections.
    let remain: Vec<usize> = r1.unmatched_rows.clone();
    let low: Vec<&Detection> = if cfg.stage2_enabled {
        parts.low.iter().map(|&i| &dets[i]).collect()
    } else {
        Vec::new()
    };
    let remain_tracks: Vec<&Track> = remain.iter().map(|&i| &state.tracks[i]).collect();
    let remain_boxes: Vec<Option<BoundingBox>> = remain.iter().map(|&i| boxes[i]).collect();
    let m2 = if cfg.stage2_appearance {
        stage_matrices(&remain_tracks, &remain_boxes, &low, |t, d| bank_similarity(&t.bank, d))
    } else {
        stage_matrices(&remain_tracks, &remain_boxes, &low, |_, _| None)
    };
    let r2 = hungarian_solve(&m2.fuse(cfg), cfg.match_cost_cap);
    for &(ri, dj) in &r2.matches {
        track_matched[remain[ri]] = true;
        report.stage2.push(StageMatch {
            track_id: state.tracks[remain[ri]].id,
            detection: parts.low[dj],
            appearance: m2.appearance[(ri, dj)],
        });
    }

    for &(ti, dj) in &r1.matches {
        apply_match(&mut state.tracks[ti], high[dj], thres, true, &cfg.motion);
    }
    for &(ri, dj) in &r2.matches {
        apply_match(&mut state.tracks[remain[ri]], low[dj], thres, false, &cfg.motion);
    }

    // Unmatched tracks move to the lost list; stale ones are dropped.
    for (t, &matched) in state.tracks.iter_mut().zip(&track_matched) {
        if !matched {
            t.status = TrackStatus::Lost;
            t.frames_since_update += 1;
        }
    }
    state.tracks.retain(|t| {
        let expired = t.frames_since_update > cfg.lost_ttl;
        if expired {
            report.deletions.push(t.id);
        }
        !expired
    });

    // Births from unmatched high-score detections above H.
    for (dj, det) in high.iter().enumerate() {
        if high_matched[dj] || det.score() <= cfg.new_track_threshold {
            continue;
        }
        state.next_id += 1;
        let mut bank = FeatureBank::with_capacity(cfg.bank_capacity);
        if let Some(e) = &det.embedding {
            bank.insert(e.clone(), det.score(), thres);
        }
        state.tracks.push(Track {
            id: state.next_id,
            kalman: kf_initiate(&det.bbox, &cfg.motion),
            bank,
            last_embedding: det.embedding.clone(),
            status: TrackStatus::Active,
            frames_since_update: 0,
            last_score: det.score(),
        });
        report.births.push(state.next_id);
    }

    for t in &state.tracks {
        if t.status == TrackStatus::Active && t.frames_since_update == 0 {
            let bbox = state_to_box(&t.kalman)?;
            report.emitted.push(TrackOutput {
                frame: f,
                id: t.id,
                bbox,
                score: t.last_score,
            });
        }
    }
    report.high = parts.high;
    report.low = parts.low;
    report.discarded = parts.discarded;
    Ok(report)
}

/// Runs the tracker over a whole sequence and collects every emission.
pub fn run_sequence(frames: &[FrameObservations], cfg: &TrackerConfig) -> Result<Vec<TrackOutput>> {
    let mut state = TrackerState::new();
    let mut out = Vec::new();
    for frame in frames {
        out.extend(smc_step(&mut state, frame, cfg)?.emitted);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(l: f64, t: f64, s: f64, frame: u32) -> Detection {
        Detection::new(BoundingBox::new(l, t, 40.0, 100.0).unwrap(), s, frame).unwrap()
    }

    #[test]
    fn empty_frame_on_empty_state() {
        let mut st = TrackerState::new();
        let r = smc_step(&mut st, &FrameObservations::empty(1), &TrackerConfig::default()).unwrap();
        assert!(r.emitted.is_empty());
        assert!(st.tracks().is_empty());
    }

    #[test]
    fn single_detection_starts_track() {
        let mut st = TrackerState::new();
        let frame = FrameObservations::new(1, vec![det(10.0, 10.0, 0.9, 1)]).unwrap();
        let r = smc_step(&mut st, &frame, &TrackerConfig::default()).unwrap();
        assert_eq!(r.births, vec![1]);
        assert_eq!(r.emitted.len(), 1);
        assert_eq!(r.emitted[0].id, 1);
        assert!(iou(&r.emitted[0].bbox, &frame.detections()[0].bbox) > 0.999);
    }

    #[test]
    fn low_score_alone_creates_nothing() {
        let mut st = TrackerState::new();
        let frame = FrameObservations::new(1, vec![det(10.0, 10.0, 0.6, 1)]).unwrap();
        let r = smc_step(&mut st, &frame, &TrackerConfig::default()).unwrap();
        assert!(r.births.is_empty());
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let mut st = TrackerState::new();
        let cfg = TrackerConfig::default();
        smc_step(&mut st, &FrameObservations::empty(5), &cfg).unwrap();
        let err = smc_step(&mut st, &FrameObservations::empty(5), &cfg).unwrap_err();
        assert!(matches!(err, Error::FrameOrder { previous: 5, got: 5 }));
    }

    #[test]
    fn static_target_keeps_id() {
        let cfg = TrackerConfig::default();
        let frames: Vec<_> = (1..=20)
            .map(|f| FrameObservations::new(f, vec![det(100.0 + 2.0 * f as f64, 50.0, 0.9, f)]).unwrap())
            .collect();
        let out = run_sequence(&frames, &cfg).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|o| o.id == 1));
    }

    #[test]
    fn lost_track_expires_after_ttl() {
        let cfg = TrackerConfig { lost_ttl: 3, ..Default::default() };
        let mut st = TrackerState::new();
        smc_step(&mut st, &FrameObservations::new(1, vec![det(0.0, 0.0, 0.9, 1)]).unwrap(), &cfg).unwrap();
        for f in 2..=4 {
            let r = smc_step(&mut st, &FrameObservations::empty(f), &cfg).unwrap();
            assert!(r.deletions.is_empty());
            assert_eq!(st.tracks()[0].status, TrackStatus::Lost);
        }
        let r = smc_step(&mut st, &FrameObservations::empty(5), &cfg).unwrap();
        assert_eq!(r.deletions, vec![1]);
        assert!(st.tracks().is_empty());
    }

    #[test]
    fn frame_gap_counts_skipped_frames() {
        let cfg = TrackerConfig { lost_ttl: 3, ..Default::default() };
        let mut st = TrackerState::new();
        smc_step(&mut st, &FrameObservations::new(1, vec![det(0.0, 0.0, 0.9, 1)]).unwrap(), &cfg).unwrap();
        let r = smc_step(&mut st, &FrameObservations::empty(6), &cfg).unwrap();
        assert_eq!(r.deletions, vec![1]);
    }

    #[test]
    fn ids_are_not_reused() {
        let cfg = TrackerConfig { lost_ttl: 1, ..Default::default() };
        let mut st = TrackerState::new();
        smc_step(&mut st, &FrameObservations::new(1, vec![det(0.0, 0.0, 0.9, 1)]).unwrap(), &cfg).unwrap();
        smc_step(&mut st, &FrameObservations::empty(2), &cfg).unwrap();
        smc_step(&mut st, &FrameObservations::empty(3), &cfg).unwrap();
        let r = smc_step(&mut st, &FrameObservations::new(4, vec![det(0.0, 0.0, 0.9, 4)]).unwrap(), &cfg).unwrap();
        assert_eq!(r.births, vec![2]);
    }
}
