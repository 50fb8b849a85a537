//! Embedding sidecar: `frame,index,d,v1,...,vd`, index is 0-based within the frame.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::appearance::EmbeddingVector;
use crate::error::{Error, Result};
use crate::geometry::FrameObservations;

pub type EmbeddingTable = BTreeMap<(u32, usize), EmbeddingVector>;

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut out = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: n, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(err("expected frame,index,d,v1..vd".into()));
        }
        let frame: u32 = fields[0].parse().map_err(|_| err(format!("bad frame `{}`", fields[0])))?;
        let index: usize = fields[1].parse().map_err(|_| err(format!("bad index `{}`", fields[1])))?;
        let d: usize = fields[2].parse().map_err(|_| err(format!("bad dimension `{}`", fields[2])))?;
        if fields.len() != 3 + d {
            return Err(err(format!("dimension {d} but {} values", fields.len() - 3)));
        }
        if *dim.get_or_insert(d) != d {
            return Err(err(format!("dimension {d} differs from earlier {}", dim.unwrap_or(d))));
        }
        let values = fields[3..]
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| err("values must be finite numbers".into()))?;
        let e = EmbeddingVector::from_values(values).map_err(|e| err(e.to_string()))?;
        if out.insert((frame, index), e).is_some() {
            return Err(err(format!("duplicate embedding for frame {frame}, index {index}")));
        }
    }
    Ok(out)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Every detection that carries an embedding, one line each.
pub fn embeddings_to_string(frames: &[FrameObservations]) -> String {
    let mut out = String::new();
    for f in frames {
        for (i, d) in f.detections().iter().enumerate() {
            if let Some(e) = &d.embedding {
                out.push_str(&format!("{},{},{}", f.frame(), i, e.dim()));
                for v in e.as_slice() {
                    out.push(',');
                    out.push_str(&v.to_string());
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_embeddings(frames: &[FrameObservations], path: &Path) -> Result<()> {
    fs::write(path, embeddings_to_string(frames)).map_err(|e| Error::io(path, e))
}

/// Attaches sidecar embeddings to detections; every entry must land on one.
pub fn attach_embeddings(frames: &mut [FrameObservations], mut table: EmbeddingTable) -> Result<()> {
    for f in frames.iter_mut() {
        let frame = f.frame();
        for (i, d) in f.detections_mut().iter_mut().enumerate() {
            if let Some(e) = table.remove(&(frame, i)) {
                d.embedding = Some(e);
            }
        }
    }
    match table.keys().next() {
        Some((frame, index)) => Err(Error::Config(format!(
            "embedding for frame {frame}, index {index} has no matching detection"
        ))),
        None => Ok(()),
    }
}
