use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbeddingRecord, EmbeddingSet, StoreError};
use crate::binio::{write_f32s, LeReader};
use crate::corpus::{Sentence, WordRef};

pub const MAGIC: &[u8; 8] = b"EMBPROBE";
pub const FORMAT_VERSION: u32 = 1;

/// Record metadata of an embedding file without the vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingIndex {
    pub layer: u32,
    pub dim: usize,
    pub records: Vec<EmbeddingRecord>,
}

pub fn write_embeddings<W: Write>(set: &EmbeddingSet, out: W) -> Result<(), StoreError> {
    set.validate()?;
    let mut w = BufWriter::new(out);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&set.layer().to_le_bytes())?;
    w.write_all(&(set.dim() as u32).to_le_bytes())?;
    w.write_all(&(set.len() as u64).to_le_bytes())?;
    for (i, r) in set.records().iter().enumerate() {
        w.write_all(&r.word.sentence_id.to_le_bytes())?;
        w.write_all(&r.word.position.to_le_bytes())?;
        w.write_all(&(r.surface.len() as u32).to_le_bytes())?;
        w.write_all(r.surface.as_bytes())?;
        write_f32s(&mut w, set.vector(i))?;
    }
    w.flush()?;
    Ok(())
}

/// Validates, then writes through a sibling temporary file and renames it
/// into place. Nothing is created when validation fails.
pub fn write_embeddings_file(set: &EmbeddingSet, path: &Path) -> Result<(), StoreError> {
    set.validate()?;
    let tmp = path.with_extension("emb.partial");
    let result = File::create(&tmp)
        .map_err(StoreError::from)
        .and_then(|f| write_embeddings(set, f));
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileHeader {
    pub layer: u32,
    pub dim: usize,
    pub count: u64,
}

/// Reads just the fixed-size header of an embedding file.
pub fn peek_header(path: &Path) -> Result<FileHeader, StoreError> {
    read_header(&mut LeReader::new(BufReader::new(File::open(path)?)))
}

fn read_header<R: Read>(r: &mut LeReader<R>) -> Result<FileHeader, StoreError> {
    let magic = r.bytes(8)?.ok_or(StoreError::TruncatedHeader)?;
    if magic != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = r.u32()?.ok_or(StoreError::TruncatedHeader)?;
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion { found: version });
    }
    let layer = r.u32()?.ok_or(StoreError::TruncatedHeader)?;
    let dim = r.u32()?.ok_or(StoreError::TruncatedHeader)? as usize;
    let count = r.u64()?.ok_or(StoreError::TruncatedHeader)?;
    if dim == 0 {
        return Err(super::ValidationError::ZeroDim.into());
    }
    Ok(FileHeader { layer, dim, count })
}

fn read_record_meta<R: Read>(
    r: &mut LeReader<R>,
    record: usize,
    prev: Option<WordRef>,
) -> Result<EmbeddingRecord, StoreError> {
    let sentence_id = r.u64()?.ok_or(StoreError::Truncated { record })?;
    let position = r.u32()?.ok_or(StoreError::Truncated { record })?;
    let len = r.u32()?.ok_or(StoreError::Truncated { record })?;
    let word = WordRef {
        sentence_id,
        position,
    };
    if prev.is_some_and(|p| p >= word) {
        return Err(StoreError::Malformed {
            record,
            reason: format!("word reference ({sentence_id}, {position}) out of order"),
        });
    }
    let bytes = r.bytes_bounded(len as u64)?.ok_or(StoreError::Truncated { record })?;
    let surface = String::from_utf8(bytes).map_err(|_| StoreError::Malformed {
        record,
        reason: "surface form is not UTF-8".into(),
    })?;
    if surface.is_empty() {
        return Err(StoreError::Malformed {
            record,
            reason: "empty surface form".into(),
        });
    }
    Ok(EmbeddingRecord { word, surface })
}

/// Reads and validates a whole embedding set. When a manifest is given the
/// records are also cross-checked against it.
pub fn read_embeddings<R: Read>(
    source: R,
    manifest: Option<&[Sentence]>,
) -> Result<EmbeddingSet, StoreError> {
    let mut r = LeReader::new(BufReader::new(source));
    let header = read_header(&mut r)?;
    let mut records = Vec::new();
    let mut vectors = Vec::new();
    for i in 0..header.count as usize {
        let meta = read_record_meta(&mut r, i, records.last().map(|m: &EmbeddingRecord| m.word))?;
        if !r.f32s(header.dim, &mut vectors)? {
            return Err(StoreError::Truncated { record: i });
        }
        if vectors[i * header.dim..].iter().any(|v| !v.is_finite()) {
            return Err(StoreError::Malformed {
                record: i,
                reason: "non-finite component".into(),
            });
        }
        records.push(meta);
    }
    if !r.at_eof()? {
        return Err(StoreError::TrailingBytes);
    }
    let set = EmbeddingSet::from_raw_parts(header.layer, header.dim, records, vectors);
    set.validate()?;
    if let Some(m) = manifest {
        set.check_against_manifest(m)?;
    }
    Ok(set)
}

pub fn read_embeddings_file(
    path: &Path,
    manifest: Option<&[Sentence]>,
) -> Result<EmbeddingSet, StoreError> {
    read_embeddings(File::open(path)?, manifest)
}

/// Reads only record metadata, skipping vector payloads.
pub fn read_index<R: Read>(source: R) -> Result<EmbeddingIndex, StoreError> {
    let mut r = LeReader::new(BufReader::new(source));
    let header = read_header(&mut r)?;
    let mut records: Vec<EmbeddingRecord> = Vec::new();
    for i in 0..header.count as usize {
        let meta = read_record_meta(&mut r, i, records.last().map(|m| m.word))?;
        if !r.skip(header.dim as u64 * 4)? {
            return Err(StoreError::Truncated { record: i });
        }
        records.push(meta);
    }
    if !r.at_eof()? {
        return Err(StoreError::TrailingBytes);
    }
    Ok(EmbeddingIndex {
        layer: header.layer,
        dim: header.dim,
        records,
    })
}

pub fn read_index_file(path: &Path) -> Result<EmbeddingIndex, StoreError> {
    read_index(File::open(path)?)
}
