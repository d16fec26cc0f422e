use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{check_table_id, read_text, write_text, ClassCatalog, EmbeddingTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub sample_id: String,
    pub class_id: String,
}

impl SampleRecord {
    pub fn new(sample_id: impl Into<String>, class_id: impl Into<String>) -> Self {
        SampleRecord {
            sample_id: sample_id.into(),
            class_id: class_id.into(),
        }
    }
}

/// Labeled instances. The acoustic vectors live in a separate embedding
/// table keyed by `sample_id`; `binding` names that table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleSet {
    samples: Vec<SampleRecord>,
    binding: String,
}

impl SampleSet {
    pub fn new(samples: Vec<SampleRecord>, binding: impl Into<String>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(samples.len());
        for s in &samples {
            check_table_id(&s.sample_id).map_err(|m| Error::invalid("sample", m))?;
            check_table_id(&s.class_id).map_err(|m| Error::invalid("sample", m))?;
            if seen.insert(s.sample_id.as_str(), ()).is_some() {
                return Err(Error::invalid(
                    "sample set",
                    format!("duplicate sample_id `{}`", s.sample_id),
                ));
            }
        }
        Ok(SampleSet {
            samples,
            binding: binding.into(),
        })
    }

    pub fn samples(&self) -> &[SampleRecord] {
        &self.samples
    }

    pub fn binding(&self) -> &str {
        &self.binding
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keeps samples whose class satisfies `keep`, preserving order.
    pub fn filter_classes(&self, mut keep: impl FnMut(&str) -> bool) -> SampleSet {
        SampleSet {
            samples: self
                .samples
                .iter()
                .filter(|s| keep(&s.class_id))
                .cloned()
                .collect(),
            binding: self.binding.clone(),
        }
    }

    /// Sample count per class, ordered by class id.
    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.class_id.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// Checks every class against a catalog.
    pub fn check_catalog(&self, catalog: &ClassCatalog) -> Result<()> {
        match self.samples.iter().find(|s| !catalog.contains(&s.class_id)) {
            Some(s) => Err(Error::UnknownClass(s.class_id.clone())),
            None => Ok(()),
        }
    }

    /// Checks that every sample has an acoustic vector.
    pub fn check_embeddings(&self, acoustic: &EmbeddingTable) -> Result<()> {
        match self
            .samples
            .iter()
            .find(|s| !acoustic.contains(&s.sample_id))
        {
            Some(s) => Err(Error::UnknownSample(s.sample_id.clone())),
            None => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.binding.is_empty() {
            out.push_str("#binding=");
            out.push_str(&self.binding);
            out.push('\n');
        }
        out.push_str(&pairs_to_text(
            self.samples
                .iter()
                .map(|s| (s.sample_id.as_str(), s.class_id.as_str())),
        ));
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut binding = String::new();
        for line in text.lines() {
            if let Some(b) = line.strip_prefix("#binding=") {
                binding = b.trim_end_matches('\r').to_string();
            }
        }
        let pairs = parse_pairs(text, path)?;
        let records = pairs
            .into_iter()
            .map(|(_, sample_id, class_id)| SampleRecord {
                sample_id,
                class_id,
            })
            .collect();
        SampleSet::new(records, binding).map_err(|e| Error::format(path, 0, e.to_string()))
    }
}

fn pairs_to_text<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    for (a, b) in pairs {
        out.push_str(a);
        out.push('\t');
        out.push_str(b);
        out.push('\n');
    }
    out
}

/// Parses `<id>\t<class_id>` lines, skipping blanks and `#` lines, and
/// rejecting repeated ids. Returns (line number, id, class id).
fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(class_id), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::format(path, lineno, "expected `<id>\\t<class_id>`"));
        };
        for part in [id, class_id] {
            check_table_id(part).map_err(|m| Error::format(path, lineno, m))?;
        }
        if let Some(first) = seen.insert(id.to_string(), lineno) {
            return Err(Error::format(
                path,
                lineno,
                format!("id `{id}` already listed on line {first}"),
            ));
        }
        out.push((lineno, id.to_string(), class_id.to_string()));
    }
    Ok(out)
}

pub fn read_sample_set(path: impl AsRef<Path>) -> Result<SampleSet> {
    let path = path.as_ref();
    SampleSet::parse(&read_text(path)?, path)
}

pub fn write_sample_set(samples: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &samples.to_text())
}

/// Reads a `sample_id\tclass_id` file (e.g. predictions) as ordered pairs.
pub fn read_labeled_pairs(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    Ok(parse_pairs(&read_text(path)?, path)?
        .into_iter()
        .map(|(_, a, b)| (a, b))
        .collect())
}

pub fn write_labeled_pairs(pairs: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    write_text(
        path.as_ref(),
        &pairs_to_text(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))),
    )
}
