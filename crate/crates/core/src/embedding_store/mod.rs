//! Per-layer word embedding sets and their on-disk format.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! "EMBPROBE" | version u32 | layer u32 | dim u32 | record count u64 | records
//! record := sentence_id u64 | position u32 | surface length u32 | UTF-8 bytes | dim x f32
//! ```

mod catalog;
mod format;
mod synthetic;

use std::io;

use thiserror::Error;

use crate::corpus::{Sentence, WordRef};

pub use catalog::{layer_file_name, CatalogError, LayerCatalog, LayerEntry, CATALOG_FILE};
pub use format::{
    peek_header, read_embeddings, read_embeddings_file, read_index, read_index_file,
    write_embeddings, write_embeddings_file, EmbeddingIndex, FileHeader, FORMAT_VERSION, MAGIC,
};
pub use synthetic::{generate_synthetic, SyntheticCorpus, SyntheticError, SyntheticParams};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("dim must be positive")]
    ZeroDim,
    #[error("record {record}: vector has {len} components, expected {dim}")]
    DimMismatch { record: usize, len: usize, dim: usize },
    #[error("record {record}: non-finite component")]
    NonFinite { record: usize },
    #[error("record {record}: not strictly after the previous (sentence_id, position)")]
    OutOfOrder { record: usize },
    #[error("record {record}: empty surface form")]
    EmptySurface { record: usize },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("bad magic, not an embedding file")]
    BadMagic,
    #[error("unsupported format version {found}")]
    UnsupportedVersion { found: u32 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated at record {record}")]
    Truncated { record: usize },
    #[error("record {record}: {reason}")]
    Malformed { record: usize, reason: String },
    #[error("trailing bytes after the last record")]
    TrailingBytes,
    #[error("validation failed: {0}")]
    Invalid(#[from] ValidationError),
    #[error("record {record} does not resolve against the corpus manifest")]
    UnresolvedRecord { record: usize },
    #[error("record {record}: surface form {found:?} differs from manifest word {expected:?}")]
    SurfaceMismatch {
        record: usize,
        expected: String,
        found: String,
    },
    #[error("sentence {sentence_id}: manifest has {expected} words, file has {found} records")]
    CountMismatch {
        sentence_id: u64,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Provenance of one embedding row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingRecord {
    pub word: WordRef,
    pub surface: String,
}

/// All word vectors of one layer, row-major, sorted by word reference.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    layer: u32,
    dim: usize,
    records: Vec<EmbeddingRecord>,
    vectors: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(layer: u32, dim: usize) -> Result<Self, ValidationError> {
        if dim == 0 {
            return Err(ValidationError::ZeroDim);
        }
        Ok(Self {
            layer,
            dim,
            records: Vec::new(),
            vectors: Vec::new(),
        })
    }

    /// Assembles a set without checking invariants; see [`Self::validate`].
    pub fn from_raw_parts(
        layer: u32,
        dim: usize,
        records: Vec<EmbeddingRecord>,
        vectors: Vec<f32>,
    ) -> Self {
        Self {
            layer,
            dim,
            records,
            vectors,
        }
    }

    /// Appends one record, enforcing dim, finiteness and ordering.
    pub fn push(
        &mut self,
        word: WordRef,
        surface: impl Into<String>,
        vector: &[f32],
    ) -> Result<(), ValidationError> {
        let record = self.records.len();
        let surface = surface.into();
        check_record(record, self.records.last().map(|r| r.word), word, &surface, vector, self.dim)?;
        self.records.push(EmbeddingRecord { word, surface });
        self.vectors.extend_from_slice(vector);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.dim == 0 {
            return Err(ValidationError::ZeroDim);
        }
        if self.vectors.len() != self.records.len() * self.dim {
            return Err(ValidationError::DimMismatch {
                record: self.vectors.len() / self.dim,
                len: self.vectors.len() % self.dim,
                dim: self.dim,
            });
        }
        let mut prev = None;
        for (i, r) in self.records.iter().enumerate() {
            check_record(i, prev, r.word, &r.surface, self.vector(i), self.dim)?;
            prev = Some(r.word);
        }
        Ok(())
    }

    pub fn layer(&self) -> u32 {
        self.layer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major `len() x dim()` matrix.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.surface.as_str())
    }

    /// Checks every record against the corpus manifest. A sentence may be
    /// absent entirely (dropped upstream) but never partially covered.
    pub fn check_against_manifest(&self, manifest: &[Sentence]) -> Result<(), StoreError> {
        check_records_against_manifest(&self.records, manifest)
    }
}

pub(crate) fn check_records_against_manifest(
    records: &[EmbeddingRecord],
    manifest: &[Sentence],
) -> Result<(), StoreError> {
    let mut i = 0;
    while i < records.len() {
        let sid = records[i].word.sentence_id;
        let sentence = manifest
            .get(sid as usize)
            .filter(|s| s.id == sid)
            .ok_or(StoreError::UnresolvedRecord { record: i })?;
        let start = i;
        while i < records.len() && records[i].word.sentence_id == sid {
            let r = &records[i];
            let expected = sentence
                .words
                .get(r.word.position as usize)
                .ok_or(StoreError::UnresolvedRecord { record: i })?;
            if *expected != r.surface {
                return Err(StoreError::SurfaceMismatch {
                    record: i,
                    expected: expected.clone(),
                    found: r.surface.clone(),
                });
            }
            i += 1;
        }
        if i - start != sentence.words.len() {
            return Err(StoreError::CountMismatch {
                sentence_id: sid,
                expected: sentence.words.len(),
                found: i - start,
            });
        }
    }
    Ok(())
}

fn check_record(
    record: usize,
    prev: Option<WordRef>,
    word: WordRef,
    surface: &str,
    vector: &[f32],
    dim: usize,
) -> Result<(), ValidationError> {
    if vector.len() != dim {
        return Err(ValidationError::DimMismatch {
            record,
            len: vector.len(),
            dim,
        });
    }
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(ValidationError::NonFinite { record });
    }
    if surface.is_empty() {
        return Err(ValidationError::EmptySurface { record });
    }
    if prev.is_some_and(|p| p >= word) {
        return Err(ValidationError::OutOfOrder { record });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;

    fn wr(s: u64, p: u32) -> WordRef {
        WordRef {
            sentence_id: s,
            position: p,
        }
    }

    #[test]
    fn push_enforces_invariants() {
        let mut set = EmbeddingSet::new(1, 2).unwrap();
        set.push(wr(0, 0), "a", &[1.0, 2.0]).unwrap();
        assert_eq!(
            set.push(wr(0, 1), "b", &[1.0]),
            Err(ValidationError::DimMismatch { record: 1, len: 1, dim: 2 })
        );
        assert_eq!(
            set.push(wr(0, 1), "b", &[f32::NAN, 0.0]),
            Err(ValidationError::NonFinite { record: 1 })
        );
        assert_eq!(
            set.push(wr(0, 0), "b", &[0.0, 0.0]),
            Err(ValidationError::OutOfOrder { record: 1 })
        );
        assert_eq!(set.len(), 1);
        assert!(EmbeddingSet::new(1, 0).is_err());
    }

    #[test]
    fn manifest_cross_check() {
        let manifest = load_corpus("a b\nc d e".as_bytes()).unwrap();
        let mut ok = EmbeddingSet::new(1, 1).unwrap();
        for (p, w) in ["c", "d", "e"].iter().enumerate() {
            ok.push(wr(1, p as u32), *w, &[0.0]).unwrap();
        }
        ok.check_against_manifest(&manifest).unwrap();

        let mut partial = EmbeddingSet::new(1, 1).unwrap();
        partial.push(wr(0, 0), "a", &[0.0]).unwrap();
        assert!(matches!(
            partial.check_against_manifest(&manifest),
            Err(StoreError::CountMismatch { sentence_id: 0, expected: 2, found: 1 })
        ));

        let mut wrong = EmbeddingSet::new(1, 1).unwrap();
        wrong.push(wr(0, 0), "x", &[0.0]).unwrap();
        assert!(matches!(
            wrong.check_against_manifest(&manifest),
            Err(StoreError::SurfaceMismatch { record: 0, .. })
        ));

        let mut dangling = EmbeddingSet::new(1, 1).unwrap();
        dangling.push(wr(7, 0), "a", &[0.0]).unwrap();
        assert!(matches!(
            dangling.check_against_manifest(&manifest),
            Err(StoreError::UnresolvedRecord { record: 0 })
        ));
    }
}
