use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_id, read_text, write_text};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRecord {
    pub class_id: String,
    /// Textual class label, e.g. "church bells".
    pub label: String,
    /// Optional sentence describing the class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ClassRecord {
    pub fn new(class_id: impl Into<String>, label: impl Into<String>) -> Self {
        ClassRecord {
            class_id: class_id.into(),
            label: label.into(),
            description: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassCatalog {
    classes: Vec<ClassRecord>,
    index: HashMap<String, usize>,
}

impl ClassCatalog {
    pub fn new(records: Vec<ClassRecord>) -> Result<Self> {
        let mut catalog = ClassCatalog::default();
        for r in records {
            catalog.push(r)?;
        }
        Ok(catalog)
    }

    pub fn push(&mut self, record: ClassRecord) -> Result<()> {
        check_id(&record.class_id).map_err(|m| Error::invalid("class record", m))?;
        if record.label.trim().is_empty() {
            return Err(Error::invalid(
                "class record",
                format!("class `{}` has an empty label", record.class_id),
            ));
        }
        if self.index.contains_key(&record.class_id) {
            return Err(Error::invalid(
                "class catalog",
                format!("duplicate class_id `{}`", record.class_id),
            ));
        }
        self.index
            .insert(record.class_id.clone(), self.classes.len());
        self.classes.push(record);
        Ok(())
    }

    pub fn classes(&self) -> &[ClassRecord] {
        &self.classes
    }

    pub fn get(&self, class_id: &str) -> Option<&ClassRecord> {
        self.index.get(class_id).map(|&i| &self.classes[i])
    }

    pub fn contains(&self, class_id: &str) -> bool {
        self.index.contains_key(class_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.class_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.classes {
            out.push_str(&serde_json::to_string(r).expect("class record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str, path: &Path) -> Result<Self> {
        let mut catalog = ClassCatalog::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ClassRecord = serde_json::from_str(line)
                .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
            catalog
                .push(record)
                .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        }
        Ok(catalog)
    }
}

pub fn read_class_catalog(path: impl AsRef<Path>) -> Result<ClassCatalog> {
    let path = path.as_ref();
    ClassCatalog::parse_jsonl(&read_text(path)?, path)
}

pub fn write_class_catalog(catalog: &ClassCatalog, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &catalog.to_jsonl())
}
