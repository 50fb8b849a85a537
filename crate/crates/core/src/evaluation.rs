//! CLEAR-MOT and identity metrics against ground truth.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;

use crate::assignment::{hungarian_solve, CostMatrix, INFEASIBLE};
use crate::association::TrackOutput;
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const MOSTLY_TRACKED: f64 = 0.8;
pub const MOSTLY_LOST: f64 = 0.2;

/// A labeled box: ground truth, or a tracker result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthEntry {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox,
}

impl From<TrackOutput> for GroundTruthEntry {
    fn from(t: TrackOutput) -> Self {
        Self {
            frame: t.frame,
            id: t.id as i64,
            bbox: t.bbox,
        }
    }
}

type FrameIndex<'a> = BTreeMap<u32, Vec<&'a GroundTruthEntry>>;

fn index_by_frame(entries: &[GroundTruthEntry]) -> Result<FrameIndex<'_>> {
    let mut seen = HashSet::new();
    let mut out: FrameIndex = BTreeMap::new();
    for e in entries {
        if !seen.insert((e.frame, e.id)) {
            return Err(Error::DuplicateEntry {
                frame: e.frame,
                id: e.id,
            });
        }
        out.entry(e.frame).or_default().push(e);
    }
    Ok(out)
}

/// Fails when results mention frames outside the ground-truth range.
pub fn check_frame_range(gt: &[GroundTruthEntry], results: &[GroundTruthEntry]) -> Result<()> {
    let (Some(lo), Some(hi)) = (gt.iter().map(|e| e.frame).min(), gt.iter().map(|e| e.frame).max()) else {
        return if results.is_empty() {
            Ok(())
        } else {
            Err(Error::Config("results given for an empty ground truth".into()))
        };
    };
    match results.iter().find(|r| r.frame < lo || r.frame > hi) {
        Some(r) => Err(Error::Config(format!(
            "result frame {} outside ground-truth frames {lo}..={hi}",
            r.frame
        ))),
        None => Ok(()),
    }
}

/// Tallies from the frame-by-frame CLEAR matching.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClearMotTally {
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub gt: u64,
    pub matches: u64,
    pub iou_sum: f64,
    /// Per ground-truth id: (frames present, frames matched).
    pub coverage: BTreeMap<i64, (u64, u64)>,
}

impl ClearMotTally {
    pub fn mean_iou(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.iou_sum / self.matches as f64
        }
    }
}

pub fn clear_mot_evaluate(
    gt: &[GroundTruthEntry],
    results: &[GroundTruthEntry],
    iou_threshold: f64,
) -> Result<ClearMotTally> {
    let gt_frames = index_by_frame(gt)?;
    let res_frames = index_by_frame(results)?;
    let frames: BTreeSet<u32> = gt_frames.keys().chain(res_frames.keys()).copied().collect();

    let mut tally = ClearMotTally::default();
    let mut previous: HashMap<i64, i64> = HashMap::new();
    let mut last_seen: HashMap<i64, i64> = HashMap::new();
    let empty = Vec::new();

    for f in frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let r = res_frames.get(&f).unwrap_or(&empty);
        tally.gt += g.len() as u64;
        for e in g.iter() {
            tally.coverage.entry(e.id).or_default().0 += 1;
        }

        let ious = DMatrix::from_fn(g.len(), r.len(), |i, j| iou(&g[i].bbox, &r[j].bbox));
        let mut g_used = vec![false; g.len()];
        let mut r_used = vec![false; r.len()];
        let mut pairs = Vec::new();

        // Keep last frame's correspondences that still overlap enough.
        let res_pos: HashMap<i64, usize> = r.iter().enumerate().map(|(j, e)| (e.id, j)).collect();
        for (i, e) in g.iter().enumerate() {
            if let Some(j) = previous.get(&e.id).and_then(|rid| res_pos.get(rid)).copied() {
                if ious[(i, j)] >= iou_threshold {
                    g_used[i] = true;
                    r_used[j] = true;
                    pairs.push((i, j));
                }
            }
        }

        let free_g: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let free_r: Vec<usize> = (0..r.len()).filter(|&j| !r_used[j]).collect();
        let cost = DMatrix::from_fn(free_g.len(), free_r.len(), |a, b| {
            let v = ious[(free_g[a], free_r[b])];
            if v >= iou_threshold {
                1.0 - v
            } else {
                INFEASIBLE
            }
        });
        let solved = hungarian_solve(&CostMatrix::new(cost)?, f64::INFINITY);
        pairs.extend(solved.matches.iter().map(|&(a, b)| (free_g[a], free_r[b])));

        previous.clear();
        for &(i, j) in &pairs {
            let (gid, rid) = (g[i].id, r[j].id);
            if last_seen.get(&gid).is_some_and(|&prev| prev != rid) {
                tally.idsw += 1;
            }
            last_seen.insert(gid, rid);
            previous.insert(gid, rid);
            tally.iou_sum += ious[(i, j)];
            tally.coverage.entry(gid).or_default().1 += 1;
        }
        tally.matches += pairs.len() as u64;
        tally.fn_ += (g.len() - pairs.len()) as u64;
        tally.fp += (r.len() - pairs.len()) as u64;
    }
    Ok(tally)
}

/// `1 - (FN + FP + IDSW) / GT`, evaluated as one integer ratio.
pub fn compute_mota(fn_: u64, fp: u64, idsw: u64, gt: u64) -> Result<f64> {
    if gt == 0 {
        return Err(Error::UndefinedMetric("MOTA with zero ground-truth boxes"));
    }
    let errors = fn_ as i128 + fp as i128 + idsw as i128;
    Ok((gt as i128 - errors) as f64 / gt as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityScores {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub idf1: f64,
}

/// Frames where each (gt id, result id) pair overlaps at or above threshold.
pub fn identity_overlap_counts(
    gt: &[GroundTruthEntry],
    results: &[GroundTruthEntry],
    iou_threshold: f64,
) -> Result<(Vec<i64>, Vec<i64>, DMatrix<u64>)> {
    let gt_frames = index_by_frame(gt)?;
    let res_frames = index_by_frame(results)?;
    let gt_ids: Vec<i64> = gt.iter().map(|e| e.id).collect::<BTreeSet<_>>().into_iter().collect();
    let res_ids: Vec<i64> = results.iter().map(|e| e.id).collect::<BTreeSet<_>>().into_iter().collect();
    let gpos: HashMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let rpos: HashMap<i64, usize> = res_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut counts = DMatrix::zeros(gt_ids.len(), res_ids.len());
    for (f, g) in &gt_frames {
        let Some(r) = res_frames.get(f) else { continue };
        for a in g {
            for b in r {
                if iou(&a.bbox, &b.bbox) >= iou_threshold {
                    counts[(gpos[&a.id], rpos[&b.id])] += 1;
                }
            }
        }
    }
    Ok((gt_ids, res_ids, counts))
}

pub fn idf1_from_counts(idtp: u64, idfp: u64, idfn: u64) -> Result<f64> {
    let denom = 2 * idtp + idfp + idfn;
    if denom == 0 {
        return Err(Error::UndefinedMetric("IDF1 with no ground-truth or result boxes"));
    }
    Ok((2 * idtp) as f64 / denom as f64)
}

/// Identity-level F1 under the one-to-one id mapping with most shared frames.
pub fn compute_idf1(
    gt: &[GroundTruthEntry],
    results: &[GroundTruthEntry],
    iou_threshold: f64,
) -> Result<IdentityScores> {
    let (_, _, counts) = identity_overlap_counts(gt, results, iou_threshold)?;
    let cost = CostMatrix::new(counts.map(|n| -(n as f64)))?;
    let idtp: u64 = hungarian_solve(&cost, f64::INFINITY)
        .matches
        .iter()
        .map(|&(i, j)| counts[(i, j)])
        .sum();
    let idfn = gt.len() as u64 - idtp;
    let idfp = results.len() as u64 - idtp;
    Ok(IdentityScores {
        idtp,
        idfp,
        idfn,
        idf1: idf1_from_counts(idtp, idfp, idfn)?,
    })
}

/// Shares of ground-truth identities matched in more than 80% / fewer than
/// 20% of their frames.
pub fn compute_mt_ml(gt: &[GroundTruthEntry], results: &[GroundTruthEntry], iou_threshold: f64) -> Result<(f64, f64)> {
    let tally = clear_mot_evaluate(gt, results, iou_threshold)?;
    Ok(mt_ml_from_coverage(&tally.coverage))
}

fn mt_ml_counts(coverage: &BTreeMap<i64, (u64, u64)>) -> (usize, usize) {
    let ratio = |&(present, matched): &(u64, u64)| matched as f64 / present as f64;
    let mt = coverage.values().filter(|c| ratio(c) > MOSTLY_TRACKED).count();
    let ml = coverage.values().filter(|c| ratio(c) < MOSTLY_LOST).count();
    (mt, ml)
}

fn mt_ml_from_coverage(coverage: &BTreeMap<i64, (u64, u64)>) -> (f64, f64) {
    if coverage.is_empty() {
        return (0.0, 0.0);
    }
    let (mt, ml) = mt_ml_counts(coverage);
    let n = coverage.len() as f64;
    (mt as f64 / n, ml as f64 / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub gt: u64,
    pub mota: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub idf1: f64,
    pub mt: f64,
    pub ml: f64,
    pub gt_identities: usize,
    pub mean_iou: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "MOTA,IDF1,IDSW,FP,FN,GT,IDTP,IDFP,IDFN,MT,ML,GT_IDS,MEAN_IOU";

    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            self.mota,
            self.idf1,
            self.idsw,
            self.fp,
            self.fn_,
            self.gt,
            self.idtp,
            self.idfp,
            self.idfn,
            self.mt,
            self.ml,
            self.gt_identities,
            self.mean_iou
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MOTA  {:.4}", self.mota)?;
        writeln!(f, "IDF1  {:.4}", self.idf1)?;
        writeln!(f, "IDs   {}", self.idsw)?;
        writeln!(f, "FP    {}", self.fp)?;
        writeln!(f, "FN    {}", self.fn_)?;
        writeln!(f, "GT    {}", self.gt)?;
        writeln!(f, "MT    {:.4}", self.mt)?;
        writeln!(f, "ML    {:.4}", self.ml)?;
        write!(f, "mIoU  {:.4}", self.mean_iou)
    }
}

/// Full report: CLEAR counts, MOTA, IDF1, MT/ML and mean matched IoU.
pub fn evaluate(gt: &[GroundTruthEntry], results: &[GroundTruthEntry], iou_threshold: f64) -> Result<MetricsReport> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::Config(format!("iou threshold {iou_threshold} outside (0, 1]")));
    }
    let tally = clear_mot_evaluate(gt, results, iou_threshold)?;
    let ids = compute_idf1(gt, results, iou_threshold)?;
    let (mt, ml) = mt_ml_from_coverage(&tally.coverage);
    Ok(MetricsReport {
        fp: tally.fp,
        fn_: tally.fn_,
        idsw: tally.idsw,
        gt: tally.gt,
        mota: compute_mota(tally.fn_, tally.fp, tally.idsw, tally.gt)?,
        idtp: ids.idtp,
        idfp: ids.idfp,
        idfn: ids.idfn,
        idf1: ids.idf1,
        mt,
        ml,
        gt_identities: tally.coverage.len(),
        mean_iou: tally.mean_iou(),
    })
}
