use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{check_table_id, read_text, write_text};
use crate::error::{Error, Result};

/// What an embedding table describes: audio instances or classes/words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Acoustic,
    Semantic,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Acoustic => "acoustic",
            EmbeddingKind::Semantic => "semantic",
        }
    }
}

impl FromStr for EmbeddingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "acoustic" => Ok(EmbeddingKind::Acoustic),
            "semantic" => Ok(EmbeddingKind::Semantic),
            other => Err(format!("unknown embedding kind `{other}`")),
        }
    }
}

/// Ordered map from identifier to a fixed-length vector of finite values.
///
/// Insertion order is preserved and is the iteration order everywhere,
/// including tie-breaking when classes are ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    kind: EmbeddingKind,
    entries: IndexMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, kind: EmbeddingKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding table", "dim must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            kind,
            entries: IndexMap::new(),
        })
    }

    pub fn from_entries<I, S>(dim: usize, kind: EmbeddingKind, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(dim, kind)?;
        for (id, v) in entries {
            table.insert(id, v)?;
        }
        Ok(table)
    }

    /// Appends an entry, enforcing arity, finiteness and id uniqueness.
    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        check_table_id(&id).map_err(|m| Error::invalid("identifier", m))?;
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding vector"));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::invalid(
                "embedding table",
                format!("duplicate id `{id}`"),
            ));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: EmbeddingKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Position of `id` in entry order.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.get_index_of(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Entry at a position in entry order.
    pub fn get_index(&self, index: usize) -> Option<(&str, &[f64])> {
        self.entries
            .get_index(index)
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.dim * 12 + 16) + 32);
        let _ = writeln!(out, "#dim={}", self.dim);
        let _ = writeln!(out, "#kind={}", self.kind.as_str());
        for (id, v) in &self.entries {
            out.push_str(id);
            for x in v {
                // Debug formatting is the shortest string that parses back
                // to the same f64.
                let _ = write!(out, "\t{x:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format. `path` is only used to label errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        let mut declared_kind = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let Some(table) = table.as_mut() else {
                let dim = line
                    .strip_prefix("#dim=")
                    .ok_or_else(|| {
                        Error::format(
                            path,
                            lineno,
                            "first non-blank line must be `#dim=<positive integer>`",
                        )
                    })?
                    .trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|d| *d > 0)
                    .ok_or_else(|| Error::format(path, lineno, "dim must be a positive integer"))?;
                table = Some(EmbeddingTable::new(dim, EmbeddingKind::Semantic)?);
                continue;
            };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(kind) = meta.strip_prefix("kind=") {
                    if declared_kind.is_some() {
                        return Err(Error::format(path, lineno, "kind declared twice"));
                    }
                    let kind = kind
                        .trim()
                        .parse::<EmbeddingKind>()
                        .map_err(|m| Error::format(path, lineno, m))?;
                    table.kind = kind;
                    declared_kind = Some(kind);
                } else if meta.starts_with("dim=") {
                    return Err(Error::format(path, lineno, "dim declared twice"));
                }
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default();
            let vector = fields
                .map(|tok| match tok.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(_) => Err(Error::format(
                        path,
                        lineno,
                        format!("non-finite value `{tok}`"),
                    )),
                    Err(_) => Err(Error::format(
                        path,
                        lineno,
                        format!("not a number: `{tok}`"),
                    )),
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != table.dim {
                return Err(Error::format(
                    path,
                    lineno,
                    format!(
                        "expected {} values for `{id}`, found {}",
                        table.dim,
                        vector.len()
                    ),
                ));
            }
            table
                .insert(id, vector)
                .map_err(|e| Error::format(path, lineno, e.to_string()))?;
        }
        table.ok_or_else(|| Error::format(path, 0, "missing `#dim=` header"))
    }
}

pub fn read_embedding_table(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    EmbeddingTable::parse(&read_text(path)?, path)
}

pub fn write_embedding_table(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &table.to_text())
}

/// Reads an embedding table, substituting `kind` when the file does not
/// declare one.
pub fn read_embedding_table_as(
    path: impl AsRef<Path>,
    kind: EmbeddingKind,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let declares_kind = text.lines().any(|l| l.starts_with("#kind="));
    let table = EmbeddingTable::parse(&text, path)?;
    Ok(if declares_kind {
        table
    } else {
        table.with_kind(kind)
    })
}
