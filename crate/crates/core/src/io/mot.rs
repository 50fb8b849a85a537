//! MOTChallenge CSV: `frame,id,left,top,width,height,conf,x,y,z`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::association::TrackOutput;
use crate::error::{Error, Result};
use crate::evaluation::GroundTruthEntry;
use crate::geometry::{BoundingBox, Detection, FrameObservations};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotCsvRecord {
    pub frame: u32,
    pub id: i64,
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub conf: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MotCsvRecord {
    pub fn new(frame: u32, id: i64, bbox: &BoundingBox, conf: f64) -> Self {
        Self {
            frame,
            id,
            left: bbox.left(),
            top: bbox.top(),
            width: bbox.width(),
            height: bbox.height(),
            conf,
            x: -1.0,
            y: -1.0,
            z: -1.0,
        }
    }

    pub fn bbox(&self) -> Result<BoundingBox> {
        BoundingBox::new(self.left, self.top, self.width, self.height)
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.frame, self.id, self.left, self.top, self.width, self.height, self.conf, self.x, self.y, self.z
        )
    }
}

fn parse_line(line: &str, n: usize) -> Result<MotCsvRecord> {
    let err = |message: String| Error::Parse { line: n, message };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(err(format!("expected 10 fields, found {}", fields.len())));
    }
    let real = |i: usize| -> Result<f64> {
        fields[i]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("field {} is not a finite number: `{}`", i + 1, fields[i])))
    };
    let frame: u32 = fields[0]
        .parse()
        .ok()
        .filter(|&f| f >= 1)
        .ok_or_else(|| err(format!("frame must be an integer >= 1, got `{}`", fields[0])))?;
    let id: i64 = fields[1]
        .parse()
        .map_err(|_| err(format!("id is not an integer: `{}`", fields[1])))?;
    let rec = MotCsvRecord {
        frame,
        id,
        left: real(2)?,
        top: real(3)?,
        width: real(4)?,
        height: real(5)?,
        conf: real(6)?,
        x: real(7)?,
        y: real(8)?,
        z: real(9)?,
    };
    rec.bbox().map_err(|e| err(e.to_string()))?;
    Ok(rec)
}

/// Parsed records paired with their 1-based line numbers.
fn parse_numbered(text: &str) -> Result<Vec<(usize, MotCsvRecord)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1).map(|r| (i + 1, r)))
        .collect()
}

pub fn parse_mot_str(text: &str) -> Result<Vec<MotCsvRecord>> {
    Ok(parse_numbered(text)?.into_iter().map(|(_, r)| r).collect())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_mot_csv(path: &Path) -> Result<Vec<MotCsvRecord>> {
    parse_mot_str(&read(path)?)
}

/// Groups detections by frame (ascending), keeping file order within a frame.
pub fn detections_from_str(text: &str) -> Result<Vec<FrameObservations>> {
    let mut by_frame: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for (n, r) in parse_numbered(text)? {
        let det = Detection::new(r.bbox()?, r.conf, r.frame).map_err(|e| Error::Parse {
            line: n,
            message: e.to_string(),
        })?;
        by_frame.entry(r.frame).or_default().push(det);
    }
    by_frame
        .into_iter()
        .map(|(f, d)| FrameObservations::new(f, d))
        .collect()
}

pub fn read_detections(path: &Path) -> Result<Vec<FrameObservations>> {
    detections_from_str(&read(path)?)
}

pub fn ground_truth_from_records(records: &[MotCsvRecord]) -> Result<Vec<GroundTruthEntry>> {
    records
        .iter()
        .map(|r| {
            Ok(GroundTruthEntry {
                frame: r.frame,
                id: r.id,
                bbox: r.bbox()?,
            })
        })
        .collect()
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    ground_truth_from_records(&parse_mot_csv(path)?)
}

pub fn records_to_string(records: &[MotCsvRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn write_records(records: &[MotCsvRecord], path: &Path) -> Result<()> {
    fs::write(path, records_to_string(records)).map_err(|e| Error::io(path, e))
}

/// Result rows sorted by `(frame, id)`; the conf column is the last matched score.
pub fn result_records(tracks: &[TrackOutput]) -> Vec<MotCsvRecord> {
    let mut sorted: Vec<&TrackOutput> = tracks.iter().collect();
    sorted.sort_by_key(|t| (t.frame, t.id));
    sorted
        .into_iter()
        .map(|t| MotCsvRecord::new(t.frame, t.id as i64, &t.bbox, t.score))
        .collect()
}

pub fn write_results_csv(tracks: &[TrackOutput], path: &Path) -> Result<()> {
    write_records(&result_records(tracks), path)
}

/// Detection rows (id `-1`) in frame order.
pub fn detection_records(frames: &[FrameObservations]) -> Vec<MotCsvRecord> {
    frames
        .iter()
        .flat_map(|f| f.detections().iter().map(|d| MotCsvRecord::new(d.frame, -1, &d.bbox, d.score())))
        .collect()
}

/// Ground-truth rows sorted by `(frame, id)` with conf 1.
pub fn ground_truth_records(gt: &[GroundTruthEntry]) -> Vec<MotCsvRecord> {
    let mut sorted: Vec<&GroundTruthEntry> = gt.iter().collect();
    sorted.sort_by_key(|e| (e.frame, e.id));
    sorted
        .into_iter()
        .map(|e| MotCsvRecord::new(e.frame, e.id, &e.bbox, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_line() {
        let frames = detections_from_str("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        assert_eq!(frames.len(), 1);
        let d = &frames[0].detections()[0];
        assert_eq!((frames[0].frame(), d.score()), (1, 0.9));
        assert_eq!(d.bbox, BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
    }

    #[test]
    fn empty_file() {
        assert!(parse_mot_str("").unwrap().is_empty());
        assert!(detections_from_str("\n\n").unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,10,20,0,40,0.9,-1,-1,-1\n";
        assert!(matches!(parse_mot_str(text), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_mot_str("1,2,3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_mot_str("0,-1,1,1,1,1,1,-1,-1,-1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            detections_from_str("\n2,-1,1,1,1,1,1.5,-1,-1,-1"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn grouping_keeps_file_order() {
        let text = "2,-1,5,5,1,1,0.5,-1,-1,-1\n1,-1,0,0,1,1,0.9,-1,-1,-1\n2,-1,1,1,1,1,0.8,-1,-1,-1\n";
        let frames = detections_from_str(text).unwrap();
        assert_eq!(frames.iter().map(|f| f.frame()).collect::<Vec<_>>(), vec![1, 2]);
        let scores: Vec<f64> = frames[1].detections().iter().map(|d| d.score()).collect();
        assert_eq!(scores, vec![0.5, 0.8]);
    }

    #[test]
    fn results_sorted_and_empty() {
        let b = BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let t = |frame, id| TrackOutput { frame, id, bbox: b, score: 0.5 };
        let recs = result_records(&[t(2, 1), t(1, 3), t(1, 2)]);
        let keys: Vec<(u32, i64)> = recs.iter().map(|r| (r.frame, r.id)).collect();
        assert_eq!(keys, vec![(1, 2), (1, 3), (2, 1)]);
        assert_eq!(records_to_string(&[]), "");
    }

    prop_compose! {
        fn arb_record()(frame in 1u32..1000, id in -1i64..50, l in -1e4f64..1e4, t in -1e4f64..1e4,
                        w in 1e-3f64..1e3, h in 1e-3f64..1e3, c in 0.0f64..=1.0) -> MotCsvRecord {
            MotCsvRecord::new(frame, id, &BoundingBox::new(l, t, w, h).unwrap(), c)
        }
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(recs in proptest::collection::vec(arb_record(), 0..30)) {
            prop_assert_eq!(parse_mot_str(&records_to_string(&recs)).unwrap(), recs);
        }
    }
}
