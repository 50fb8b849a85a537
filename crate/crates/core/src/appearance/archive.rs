//! Text archives for attention parameters and precomputed feature maps.
//!
//! Parameter archive layout (one item per line, whitespace separated):
//!
//! ```text
//! smctrack-params 1
//! channels <C>
//! key_dim <d_k>
//! embedding_dim <d>
//! extractor_seed <u64>
//! tensor w_q.0 <rows> <cols>
//! <row 0 values>
//! ...
//! tensor w_fc <rows> <cols>
//! ...
//! end
//! ```
//!
//! Tensors appear in the order `w_q.0..3`, `w_k.0..3`, `w_v.0..3`, `w_fc`.
//! Values use Rust's shortest round-trip float formatting, so a write/read
//! cycle is bit-exact.
//!
//! Feature map files hold `featuremap <C> <H> <W>` followed by `C·H` lines of
//! `W` values (channel-major, then row).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::attention::AttentionParams;
use super::features::FeatureMap;
use super::slicing::SLICE_COUNT;

const PARAMS_MAGIC: &str = "smctrack-params 1";

fn tensor_names() -> Vec<String> {
    let mut names = Vec::with_capacity(3 * SLICE_COUNT + 1);
    for group in ["w_q", "w_k", "w_v"] {
        for i in 0..SLICE_COUNT {
            names.push(format!("{group}.{i}"));
        }
    }
    names.push("w_fc".into());
    names
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "tensor {name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn params_to_string(params: &AttentionParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PARAMS_MAGIC}");
    let _ = writeln!(out, "channels {}", params.channels());
    let _ = writeln!(out, "key_dim {}", params.key_dim());
    let _ = writeln!(out, "embedding_dim {}", params.embedding_dim());
    let _ = writeln!(out, "extractor_seed {}", params.extractor_seed);
    for (name, m) in tensor_names().iter().zip(params.tensors()) {
        write_matrix(&mut out, name, m);
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if !line.is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::Parse {
            line: 0,
            message: "unexpected end of archive".into(),
        })
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (n, line) = self.next_line()?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| Error::Parse {
                line: n,
                message: format!("bad value for {key}: {v}"),
            }),
            _ => Err(Error::Parse {
                line: n,
                message: format!("expected `{key} <value>`"),
            }),
        }
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let (n, header) = self.next_line()?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let dims = match parts.as_slice() {
            ["tensor", got, r, c] if *got == name => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
            _ => None,
        };
        let (rows, cols) = dims.ok_or_else(|| Error::Parse {
            line: n,
            message: format!("expected `tensor {name} <rows> <cols>`"),
        })?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = self.next_line()?;
            let row = parse_floats(line, n)?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected {cols} values, found {}", row.len()),
                });
            }
            values.extend(row);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }
}

fn parse_floats(line: &str, n: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: n,
                message: format!("not a number: {tok}"),
            })
        })
        .collect()
}

pub fn params_from_str(text: &str) -> Result<AttentionParams> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.next_line()?;
    if magic != PARAMS_MAGIC {
        return Err(Error::Parse {
            line: n,
            message: format!("expected header `{PARAMS_MAGIC}`"),
        });
    }
    let channels: usize = lines.keyed("channels")?;
    let key_dim: usize = lines.keyed("key_dim")?;
    let embedding_dim: usize = lines.keyed("embedding_dim")?;
    let extractor_seed: u64 = lines.keyed("extractor_seed")?;

    let names = tensor_names();
    let mut tensors = names
        .iter()
        .map(|name| lines.matrix(name))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let mut take = || tensors.next().expect("one tensor per name");
    let w_q = std::array::from_fn(|_| take());
    let w_k = std::array::from_fn(|_| take());
    let w_v = std::array::from_fn(|_| take());
    let w_fc = take();
    let (n, end) = lines.next_line()?;
    if end != "end" {
        return Err(Error::Parse {
            line: n,
            message: "expected `end`".into(),
        });
    }

    let params = AttentionParams {
        w_q,
        w_k,
        w_v,
        w_fc,
        extractor_seed,
    };
    params.validate()?;
    if (params.channels(), params.key_dim(), params.embedding_dim()) != (channels, key_dim, embedding_dim) {
        return Err(Error::Shape("archive header disagrees with tensor shapes".into()));
    }
    Ok(params)
}

pub fn save_params(params: &AttentionParams, path: &Path) -> Result<()> {
    fs::write(path, params_to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<AttentionParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_str(&text)
}

pub fn feature_map_to_string(fm: &FeatureMap) -> String {
    let mut out = format!("featuremap {} {} {}\n", fm.channels(), fm.height(), fm.width());
    for row in fm.data().chunks(fm.width()) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

pub fn feature_map_from_str(text: &str) -> Result<FeatureMap> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next_line()?;
    let dims: Vec<usize> = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["featuremap", rest @ ..] if rest.len() == 3 => rest.iter().filter_map(|t| t.parse().ok()).collect(),
        _ => Vec::new(),
    };
    let [c, h, w] = dims[..] else {
        return Err(Error::Parse {
            line: n,
            message: "expected `featuremap <C> <H> <W>`".into(),
        });
    };
    let mut data = Vec::with_capacity(c * h * w);
    for _ in 0..c * h {
        let (n, line) = lines.next_line()?;
        let row = parse_floats(line, n)?;
        if row.len() != w {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {w} values, found {}", row.len()),
            });
        }
        data.extend(row);
    }
    FeatureMap::new(c, h, w, data)
}

pub fn load_feature_map(path: &Path) -> Result<FeatureMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    feature_map_from_str(&text)
}

pub fn save_feature_map(fm: &FeatureMap, path: &Path) -> Result<()> {
    fs::write(path, feature_map_to_string(fm)).map_err(|e| Error::io(path, e))
}
