//! Bilinear compatibility `F(x, y) = θ(x)ᵀ W φ(y)` and the zero-shot
//! classifier that ranks candidate classes by it.

use std::cmp::Ordering;

use crate::corpus::{CompatibilityModel, EmbeddingTable};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Candidate classes sorted by descending score. Equal scores keep the
/// order in which the classes appear in the semantic table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredClassList {
    entries: Vec<(String, f64)>,
}

impl ScoredClassList {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self) -> &str {
        &self.entries[0].0
    }

    /// 1-based position of `class_id`.
    pub fn position(&self, class_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|(c, _)| c == class_id)
            .map(|p| p + 1)
    }
}

fn check_acoustic(model: &CompatibilityModel, acoustic: &[f64]) -> Result<()> {
    if acoustic.len() != model.acoustic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.acoustic_dim(),
            found: acoustic.len(),
        });
    }
    if acoustic.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("acoustic embedding"));
    }
    Ok(())
}

fn check_semantic(model: &CompatibilityModel, semantic: &[f64]) -> Result<()> {
    if semantic.len() != model.semantic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.semantic_dim(),
            found: semantic.len(),
        });
    }
    if semantic.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("semantic embedding"));
    }
    Ok(())
}

/// Projects an acoustic embedding into the semantic space: `Wᵀθ`.
pub fn project(model: &CompatibilityModel, acoustic: &[f64]) -> Result<Vec<f64>> {
    check_acoustic(model, acoustic)?;
    Ok(model.weights().transpose_mul_vec(acoustic))
}

/// `θᵀ W φ`.
pub fn compatibility(
    model: &CompatibilityModel,
    acoustic: &[f64],
    semantic: &[f64],
) -> Result<f64> {
    check_semantic(model, semantic)?;
    let projected = project(model, acoustic)?;
    Ok(dot(&projected, semantic))
}

/// Orders (table index, score) pairs: score descending, then table order.
pub(crate) fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

/// Resolves candidate ids to semantic-table positions, dropping repeats.
pub(crate) fn resolve_candidates<S: AsRef<str>>(
    table: &EmbeddingTable,
    candidates: &[S],
) -> Result<Vec<usize>> {
    let mut idx = Vec::with_capacity(candidates.len());
    for c in candidates {
        let c = c.as_ref();
        let i = table
            .index_of(c)
            .ok_or_else(|| Error::UnknownClass(c.to_string()))?;
        if !idx.contains(&i) {
            idx.push(i);
        }
    }
    if idx.is_empty() {
        return Err(Error::Empty("candidate class set"));
    }
    Ok(idx)
}

/// Scores every candidate in a pre-resolved list and sorts the result.
pub(crate) fn score_resolved(
    model: &CompatibilityModel,
    acoustic: &[f64],
    table: &EmbeddingTable,
    candidates: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if table.dim() != model.semantic_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.semantic_dim(),
            found: table.dim(),
        });
    }
    let projected = project(model, acoustic)?;
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| {
            let (_, phi) = table.get_index(i).expect("resolved candidate");
            (i, dot(&projected, phi))
        })
        .collect();
    scored.sort_by(rank_order);
    Ok(scored)
}

/// Scores every candidate class and returns them best first.
pub fn score_classes<S: AsRef<str>>(
    model: &CompatibilityModel,
    acoustic: &[f64],
    semantic_table: &EmbeddingTable,
    candidates: &[S],
) -> Result<ScoredClassList> {
    let resolved = resolve_candidates(semantic_table, candidates)?;
    let scored = score_resolved(model, acoustic, semantic_table, &resolved)?;
    Ok(ScoredClassList {
        entries: scored
            .into_iter()
            .map(|(i, s)| {
                (
                    semantic_table.get_index(i).expect("resolved").0.to_string(),
                    s,
                )
            })
            .collect(),
    })
}

/// The highest-scoring candidate class.
pub fn classify<S: AsRef<str>>(
    model: &CompatibilityModel,
    acoustic: &[f64],
    semantic_table: &EmbeddingTable,
    candidates: &[S],
) -> Result<String> {
    let resolved = resolve_candidates(semantic_table, candidates)?;
    let scored = score_resolved(model, acoustic, semantic_table, &resolved)?;
    Ok(semantic_table
        .get_index(scored[0].0)
        .expect("resolved")
        .0
        .to_string())
}
