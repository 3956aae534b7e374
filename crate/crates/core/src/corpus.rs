//! Sentence ingestion, word tokenization and word/subword alignment.

use std::io::{self, Read, Write};
use std::ops::RangeInclusive;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidEncoding { offset: usize },
    #[error("empty corpus")]
    Empty,
    #[error("malformed corpus manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("position {position} has no alignment range (sentence has {words} words)")]
    PositionOutOfRange { position: usize, words: usize },
    #[error("subword {index} outside the subword matrix ({rows} rows)")]
    SubwordOutOfRange { index: usize, rows: usize },
    #[error("range for word {position} is empty or out of order")]
    BadRange { position: usize },
    #[error("subword matrix length {len} is not a multiple of dim {dim}")]
    RaggedMatrix { len: usize, dim: usize },
}

/// One input line, tokenized into words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u64,
    pub words: Vec<String>,
    pub raw_text: String,
}

/// A word occurrence: `position` indexes into the sentence's `words`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordRef {
    pub sentence_id: u64,
    pub position: u32,
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{P}$").expect("valid regex"))
}

fn is_punctuation(c: char) -> bool {
    let mut buf = [0u8; 4];
    punctuation().is_match(c.encode_utf8(&mut buf))
}

/// Splits on whitespace, then detaches leading and trailing punctuation
/// characters of each chunk as one-character words. Inner punctuation
/// ("don't", "U.S") stays attached.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut words = Vec::new();
    for chunk in line.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let lead = chars.iter().take_while(|c| is_punctuation(**c)).count();
        if lead == chars.len() {
            words.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_punctuation(**c)).count();
        words.extend(chars[..lead].iter().map(|c| c.to_string()));
        words.push(chars[lead..chars.len() - trail].iter().collect());
        words.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    words
}

/// Reads one sentence per line. Blank lines are skipped; ids are dense in
/// file order.
pub fn load_corpus<R: Read>(mut source: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CorpusError::InvalidEncoding {
        offset: e.valid_up_to(),
    })?;
    let sentences: Vec<Sentence> = text
        .lines()
        .map(|line| line.trim_end_matches('\r'))
        .filter(|line| !line.trim().is_empty())
        .enumerate()
        .map(|(id, line)| Sentence {
            id: id as u64,
            words: tokenize(line),
            raw_text: line.to_string(),
        })
        .collect();
    if sentences.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(sentences)
}

pub fn write_manifest<W: Write>(sentences: &[Sentence], out: W) -> Result<(), CorpusError> {
    serde_json::to_writer(out, sentences).map_err(|e| CorpusError::Manifest(e.to_string()))
}

/// Reads a manifest and checks the dense-id and non-empty-words invariants.
pub fn read_manifest<R: Read>(source: R) -> Result<Vec<Sentence>, CorpusError> {
    let sentences: Vec<Sentence> =
        serde_json::from_reader(source).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    for (i, s) in sentences.iter().enumerate() {
        if s.id != i as u64 {
            return Err(CorpusError::Manifest(format!(
                "sentence at index {i} has id {}",
                s.id
            )));
        }
        if s.words.is_empty() || s.words.iter().any(String::is_empty) {
            return Err(CorpusError::Manifest(format!("sentence {i} has an empty word")));
        }
    }
    Ok(sentences)
}

/// Keeps the sentences whose word list agrees with the one produced by an
/// external tokenizer pass. Disagreeing sentences are dropped, never guessed.
/// Returns the ids that were kept.
pub fn reconcile_word_lists(sentences: &[Sentence], external: &[(u64, Vec<String>)]) -> Vec<u64> {
    let mut kept = Vec::with_capacity(external.len());
    for (id, words) in external {
        match sentences.get(*id as usize) {
            Some(s) if &s.words == words => kept.push(*id),
            Some(s) => tracing::warn!(
                sentence = id,
                expected = s.words.len(),
                found = words.len(),
                "word list mismatch, dropping sentence"
            ),
            None => tracing::warn!(sentence = id, "unknown sentence id, dropping"),
        }
    }
    kept
}

/// Maps each word of a sentence to its inclusive range of model subwords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordAlignment {
    pub sentence_id: u64,
    ranges: Vec<(usize, usize)>,
}

impl SubwordAlignment {
    /// Ranges must be non-empty and strictly increasing across words.
    pub fn new(sentence_id: u64, ranges: Vec<(usize, usize)>) -> Result<Self, AlignmentError> {
        let mut next_free = 0usize;
        for (position, &(first, last)) in ranges.iter().enumerate() {
            if first > last || (position > 0 && first < next_free) {
                return Err(AlignmentError::BadRange { position });
            }
            next_free = last + 1;
        }
        Ok(Self { sentence_id, ranges })
    }

    /// Builds the alignment from the number of subwords each word was split
    /// into, skipping `leading_specials` sequence-start markers.
    pub fn from_piece_counts(
        sentence_id: u64,
        leading_specials: usize,
        counts: &[usize],
    ) -> Result<Self, AlignmentError> {
        let mut ranges = Vec::with_capacity(counts.len());
        let mut cursor = leading_specials;
        for (position, &n) in counts.iter().enumerate() {
            if n == 0 {
                return Err(AlignmentError::BadRange { position });
            }
            ranges.push((cursor, cursor + n - 1));
            cursor += n;
        }
        Self::new(sentence_id, ranges)
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn range(&self, position: usize) -> Option<RangeInclusive<usize>> {
        self.ranges.get(position).map(|&(a, b)| a..=b)
    }
}

/// Returns the embedding of the word at `position`: the row of its last
/// subword. `subword_vectors` is row-major with `dim` columns.
pub fn word_vector_of<'a>(
    alignment: &SubwordAlignment,
    subword_vectors: &'a [f32],
    dim: usize,
    position: usize,
) -> Result<&'a [f32], AlignmentError> {
    if dim == 0 || subword_vectors.len() % dim != 0 {
        return Err(AlignmentError::RaggedMatrix {
            len: subword_vectors.len(),
            dim,
        });
    }
    let range = alignment
        .range(position)
        .ok_or(AlignmentError::PositionOutOfRange {
            position,
            words: alignment.len(),
        })?;
    let last = *range.end();
    let rows = subword_vectors.len() / dim;
    if last >= rows {
        return Err(AlignmentError::SubwordOutOfRange { index: last, rows });
    }
    Ok(&subword_vectors[last * dim..(last + 1) * dim])
}
