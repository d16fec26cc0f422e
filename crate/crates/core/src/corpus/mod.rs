//! In-memory data model and file formats for embeddings, class catalogs,
//! sample sets, fold plans and trained models.
//!
//! Every reader validates its input completely before returning, so a
//! value obtained from disk always satisfies the type's invariants.

mod catalog;
mod embedding;
mod folds;
mod model;
mod samples;

use std::fs;
use std::path::Path;

pub use catalog::{read_class_catalog, write_class_catalog, ClassCatalog, ClassRecord};
pub use embedding::{
    read_embedding_table, read_embedding_table_as, write_embedding_table, EmbeddingKind,
    EmbeddingTable,
};
pub use folds::{read_fold_plan, write_fold_plan, FoldPlan, Role};
pub use model::{read_model, write_model, CompatibilityModel};
pub use samples::{
    read_labeled_pairs, read_sample_set, write_labeled_pairs, write_sample_set, SampleRecord,
    SampleSet,
};

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Identifier rule shared by every persisted id: nonempty, no tab, newline
/// or carriage return.
pub(crate) fn check_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() {
        return Err("identifier is empty".into());
    }
    if id.contains(['\t', '\n', '\r']) {
        return Err(format!("identifier {id:?} contains a tab or line break"));
    }
    Ok(())
}

/// Ids stored as the first column of a line-oriented file additionally may
/// not start with `#`, which marks metadata lines.
pub(crate) fn check_table_id(id: &str) -> std::result::Result<(), String> {
    check_id(id)?;
    if id.starts_with('#') {
        return Err(format!("identifier {id:?} starts with `#`"));
    }
    Ok(())
}
