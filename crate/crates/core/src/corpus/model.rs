use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Learned projection matrix `W` (acoustic_dim × semantic_dim) with the
/// metadata of the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityModel {
    weights: Matrix,
    pub lambda: f64,
    pub seed: u64,
    pub notes: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    acoustic_dim: usize,
    semantic_dim: usize,
    lambda: f64,
    seed: u64,
    #[serde(default)]
    notes: String,
}

impl CompatibilityModel {
    pub fn new(weights: Matrix, lambda: f64, seed: u64) -> Result<Self> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::invalid("model", "weight matrix must be non-empty"));
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("model weights"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(
                "model",
                format!("lambda must be a nonnegative number, got {lambda}"),
            ));
        }
        Ok(CompatibilityModel {
            weights,
            lambda,
            seed,
            notes: String::new(),
        })
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn acoustic_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn semantic_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut weights = self.weights.clone();
        weights.scale(factor);
        let mut m = CompatibilityModel::new(weights, self.lambda, self.seed)?;
        m.notes = self.notes.clone();
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let header = Header {
            acoustic_dim: self.acoustic_dim(),
            semantic_dim: self.semantic_dim(),
            lambda: self.lambda,
            seed: self.seed,
            notes: self.notes.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("model header serializes");
        out.push('\n');
        for r in 0..self.weights.rows() {
            for (c, x) in self.weights.row(r).iter().enumerate() {
                if c > 0 {
                    out.push('\t');
                }
                let _ = write!(out, "{x:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let Some((_, first)) = lines.next() else {
            return Err(Error::format(path, 0, "empty model file"));
        };
        let header: Header = serde_json::from_str(first)
            .map_err(|e| Error::format(path, 1, format!("bad header: {e}")))?;
        if header.acoustic_dim == 0 || header.semantic_dim == 0 {
            return Err(Error::format(path, 1, "dimensions must be positive"));
        }
        let mut data = Vec::with_capacity(header.acoustic_dim * header.semantic_dim);
        let mut rows = 0;
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            if rows == header.acoustic_dim {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("more than {} weight rows", header.acoustic_dim),
                ));
            }
            let before = data.len();
            for tok in line.split('\t') {
                match tok.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => data.push(v),
                    _ => {
                        return Err(Error::format(
                            path,
                            lineno,
                            format!("invalid weight `{tok}`"),
                        ))
                    }
                }
            }
            if data.len() - before != header.semantic_dim {
                return Err(Error::format(
                    path,
                    lineno,
                    format!(
                        "expected {} weights, found {}",
                        header.semantic_dim,
                        data.len() - before
                    ),
                ));
            }
            rows += 1;
        }
        if rows != header.acoustic_dim {
            return Err(Error::format(
                path,
                0,
                format!("expected {} weight rows, found {rows}", header.acoustic_dim),
            ));
        }
        let weights = Matrix::from_vec(header.acoustic_dim, header.semantic_dim, data)?;
        let model = CompatibilityModel::new(weights, header.lambda, header.seed)
            .map_err(|e| Error::format(path, 1, e.to_string()))?;
        Ok(model.with_notes(header.notes))
    }
}

pub fn read_model(path: impl AsRef<Path>) -> Result<CompatibilityModel> {
    let path = path.as_ref();
    CompatibilityModel::parse(&read_text(path)?, path)
}

pub fn write_model(model: &CompatibilityModel, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &model.to_text())
}
