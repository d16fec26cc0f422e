//! Class-level semantic embeddings assembled from word vectors, and
//! clip-level acoustic embeddings averaged from segment vectors.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_text, ClassCatalog, EmbeddingKind, EmbeddingTable};
use crate::error::{Error, Result};
use crate::linalg::mean_of;

const DEFAULT_STOPWORDS: &str = include_str!("../../../fixtures/stopwords_en.txt");

/// How text is split into lookup tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenRule {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
}

impl TokenRule {
    pub fn new(lowercase: bool, stopwords: BTreeSet<String>) -> Result<Self> {
        if lowercase {
            if let Some(w) = stopwords.iter().find(|w| w.chars().any(char::is_uppercase)) {
                return Err(Error::invalid(
                    "token rule",
                    format!("stopword `{w}` is not lowercase but lowercasing is enabled"),
                ));
            }
        }
        Ok(TokenRule {
            lowercase,
            stopwords,
        })
    }

    /// Lowercasing plus the bundled English stopword list.
    pub fn english() -> Self {
        TokenRule {
            lowercase: true,
            stopwords: parse_stopwords(DEFAULT_STOPWORDS),
        }
    }

    /// Removes ASCII punctuation, splits on whitespace and optionally
    /// lowercases. Stopwords are not removed here.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let stripped: String = text.chars().filter(|c| !c.is_ascii_punctuation()).collect();
        stripped
            .split_whitespace()
            .map(|t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .collect()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Reads a stopword file: one token per line, `#` starts a comment line.
pub fn read_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    Ok(parse_stopwords(&read_text(path.as_ref())?))
}

/// An averaged embedding and how much of the text it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub vector: Vec<f64>,
    /// Lookup units (words or phrases) that contributed to the mean.
    pub used: usize,
    /// Tokens missing from the word table.
    pub oov: Vec<String>,
}

fn require_semantic(table: &EmbeddingTable) -> Result<()> {
    if table.kind() != EmbeddingKind::Semantic {
        return Err(Error::invalid(
            "word table",
            "expected a semantic embedding table",
        ));
    }
    Ok(())
}

fn average_tokens<'a>(
    text: &str,
    tokens: impl Iterator<Item = &'a String>,
    table: &EmbeddingTable,
) -> Result<Assembled> {
    let mut found = Vec::new();
    let mut oov = Vec::new();
    for t in tokens {
        match table.get(t) {
            Some(v) => found.push(v),
            None => oov.push(t.clone()),
        }
    }
    let used = found.len();
    let vector = mean_of(table.dim(), found).ok_or_else(|| Error::NoCoverage(text.to_string()))?;
    Ok(Assembled { vector, used, oov })
}

/// Mean of the word vectors of a class label's tokens.
///
/// A multi-word label is first looked up as a single underscore-joined
/// phrase; only if that misses are its words averaged individually.
/// Out-of-vocabulary words are skipped and reported.
pub fn assemble_label_embedding(
    label: &str,
    word_table: &EmbeddingTable,
    rule: &TokenRule,
) -> Result<Assembled> {
    require_semantic(word_table)?;
    let tokens = rule.tokenize(label);
    if tokens.len() > 1 {
        if let Some(v) = word_table.get(&tokens.join("_")) {
            return Ok(Assembled {
                vector: v.to_vec(),
                used: 1,
                oov: Vec::new(),
            });
        }
    }
    average_tokens(label, tokens.iter(), word_table)
}

/// Mean of the word vectors of a description's non-stopword tokens.
pub fn assemble_sentence_embedding(
    description: &str,
    word_table: &EmbeddingTable,
    rule: &TokenRule,
) -> Result<Assembled> {
    require_semantic(word_table)?;
    let tokens = rule.tokenize(description);
    average_tokens(
        description,
        tokens.iter().filter(|t| !rule.is_stopword(t)),
        word_table,
    )
}

/// Joins tables with identical id sets by concatenating each id's vectors
/// in the given table order. Output entries follow the first table.
pub fn concat_embeddings(tables: &[&EmbeddingTable]) -> Result<EmbeddingTable> {
    let first = tables.first().ok_or(Error::Empty("table list"))?;
    let mut mismatched: BTreeSet<&str> = BTreeSet::new();
    for t in &tables[1..] {
        mismatched.extend(first.ids().filter(|id| !t.contains(id)));
        mismatched.extend(t.ids().filter(|id| !first.contains(id)));
    }
    if !mismatched.is_empty() {
        return Err(Error::IdSetMismatch(
            mismatched.into_iter().map(str::to_string).collect(),
        ));
    }
    let dim = tables.iter().map(|t| t.dim()).sum();
    let mut out = EmbeddingTable::new(dim, first.kind())?;
    for id in first.ids() {
        let mut v = Vec::with_capacity(dim);
        for t in tables {
            v.extend_from_slice(t.get(id).expect("id sets checked"));
        }
        out.insert(id, v)?;
    }
    Ok(out)
}

/// Clip embedding as the componentwise mean of its segment embeddings.
pub fn aggregate_clip_embedding<V: AsRef<[f64]>>(segments: &[V]) -> Result<Vec<f64>> {
    let dim = segments
        .first()
        .ok_or(Error::Empty("segment list"))?
        .as_ref()
        .len();
    if let Some(bad) = segments.iter().find(|s| s.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.as_ref().len(),
        });
    }
    Ok(mean_of(dim, segments.iter().map(AsRef::as_ref)).expect("nonempty"))
}

/// Where a class's semantic vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Average word vectors of the textual label.
    Label,
    /// Average word vectors of the sentence description.
    Description,
    /// Take the vector stored under the class id (e.g. a sentence encoder's
    /// output).
    Precomputed,
}

/// One component of a class embedding, such as "WLE" or "GSE".
#[derive(Debug, Clone)]
pub struct AssemblySpec<'a> {
    pub name: String,
    pub source: Source,
    pub table: &'a EmbeddingTable,
    pub rule: TokenRule,
    /// L2-normalize this component before concatenation.
    pub normalize: bool,
}

impl<'a> AssemblySpec<'a> {
    pub fn new(name: impl Into<String>, source: Source, table: &'a EmbeddingTable) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::invalid("assembly spec", "name is empty"));
        }
        Ok(AssemblySpec {
            name,
            source,
            table,
            rule: TokenRule::default(),
            normalize: false,
        })
    }

    pub fn with_rule(mut self, rule: TokenRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn normalized(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    fn assemble(&self, class: &crate::corpus::ClassRecord) -> Result<Assembled> {
        match self.source {
            Source::Label => assemble_label_embedding(&class.label, self.table, &self.rule),
            Source::Description => {
                let d = class
                    .description
                    .as_deref()
                    .ok_or_else(|| Error::MissingDescription(class.class_id.clone()))?;
                assemble_sentence_embedding(d, self.table, &self.rule)
            }
            Source::Precomputed => {
                let v = self
                    .table
                    .get(&class.class_id)
                    .ok_or_else(|| Error::UnknownClass(class.class_id.clone()))?;
                Ok(Assembled {
                    vector: v.to_vec(),
                    used: 1,
                    oov: Vec::new(),
                })
            }
        }
    }
}

/// Out-of-vocabulary tokens met while assembling one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OovReport {
    pub class_id: String,
    pub spec: String,
    pub used: usize,
    pub oov: Vec<String>,
}

/// A class semantic table plus per-class coverage statistics.
#[derive(Debug, Clone)]
pub struct ClassEmbeddings {
    pub table: EmbeddingTable,
    pub coverage: Vec<OovReport>,
}

/// Builds one semantic vector per catalog class by assembling every spec
/// and concatenating the results in spec order.
pub fn build_class_semantic_table(
    catalog: &ClassCatalog,
    specs: &[AssemblySpec<'_>],
) -> Result<ClassEmbeddings> {
    if specs.is_empty() {
        return Err(Error::Empty("assembly spec list"));
    }
    let mut names = HashSet::new();
    if let Some(dup) = specs.iter().find(|s| !names.insert(s.name.as_str())) {
        return Err(Error::invalid(
            "assembly spec",
            format!("duplicate name `{}`", dup.name),
        ));
    }
    let dim: usize = specs.iter().map(|s| s.table.dim()).sum();
    let mut table = EmbeddingTable::new(dim, EmbeddingKind::Semantic)?;
    let mut coverage = Vec::new();
    for class in catalog.classes() {
        let mut vector = Vec::with_capacity(dim);
        for spec in specs {
            let mut part = spec.assemble(class)?;
            debug_assert_eq!(part.vector.len(), spec.table.dim());
            if spec.normalize {
                l2_normalize(&mut part.vector);
            }
            vector.extend_from_slice(&part.vector);
            coverage.push(OovReport {
                class_id: class.class_id.clone(),
                spec: spec.name.clone(),
                used: part.used,
                oov: part.oov,
            });
        }
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: vector.len(),
            });
        }
        table.insert(class.class_id.clone(), vector)?;
    }
    Ok(ClassEmbeddings { table, coverage })
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}
