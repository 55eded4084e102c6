//! Document ingestion, minimal cleaning, annotation loading, and corpus
//! statistics.
//!
//! Cleaning is intentionally conservative: it strips non-printable characters
//! and normalizes whitespace, nothing else. No stop-word removal and no case
//! folding happen here, so the printable content survives byte-for-byte.
//! Lemmas and POS tags come from an external tagger and are loaded from a TSV
//! stream (see [`Corpus::load_annotations`]); statistics are computed over
//! lemmas after POS filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One token of a document as produced by the external tagger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
}

/// A single document: cleaned text plus (once loaded) its annotation rows.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
}

/// An ordered, id-indexed collection of documents.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

/// Lemma-level statistics of an annotated, POS-filtered corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats<F: Scalar = f64> {
    pub total_tokens: usize,
    pub total_unique_tokens: usize,
    pub avg_tokens_per_doc: F,
    pub avg_unique_tokens_per_doc: F,
    /// `total_unique_tokens / total_tokens`, zero on an empty corpus.
    pub unique_token_ratio: F,
    /// Fraction of unique lemmas that occur exactly once corpus-wide.
    pub hapax_ratio: F,
}

fn is_stripped(c: char) -> bool {
    if c.is_whitespace() {
        return false;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::Control | GeneralCategory::Format
    ) || c == '\u{FFFD}'
}

/// Minimal cleaning: drop non-printable characters (Unicode `Cc`/`Cf` plus
/// the replacement character), collapse whitespace runs to single spaces,
/// and trim. Total and idempotent; printable content is untouched.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if !is_stripped(c) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

impl Corpus {
    /// Builds a corpus from `(id, raw_text)` pairs, cleaning each text.
    pub fn from_texts<I, S, T>(texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut corpus = Corpus::default();
        for (id, raw) in texts {
            let id = id.into();
            if corpus.index.contains_key(&id) {
                return Err(Error::InvalidArgument(format!("duplicate document id '{id}'")));
            }
            corpus.index.insert(id.clone(), corpus.docs.len());
            corpus.docs.push(Document { id, text: clean_text(raw.as_ref()), tokens: Vec::new() });
        }
        Ok(corpus)
    }

    /// Loads every `.txt` file of a directory as one document; the filename
    /// stem becomes the document id. Files are taken in id order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let mut entries = Vec::new();
        for entry in fs::read_dir(dir.as_ref())? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!("non-UTF-8 file name: {}", path.display()))
                    })?
                    .to_string();
                entries.push((id, path));
            }
        }
        entries.sort();
        let mut texts = Vec::with_capacity(entries.len());
        for (id, path) in entries {
            texts.push((id, fs::read_to_string(&path)?));
        }
        Self::from_texts(texts)
    }

    /// Parses a tagger TSV stream and attaches tokens to the documents.
    ///
    /// The stream is grouped per document by `#doc <id>` header lines; every
    /// other non-blank line must be `surface<TAB>lemma<TAB>pos`. Rows outside
    /// any group, malformed rows, and unknown ids are errors (with the
    /// offending line number).
    pub fn load_annotations<R: BufRead>(&mut self, reader: R) -> Result<()> {
        let mut current: Option<usize> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#doc") {
                let id = rest.trim();
                if id.is_empty() {
                    return Err(Error::parse(lineno, "missing document id after #doc"));
                }
                let doc_idx = *self
                    .index
                    .get(id)
                    .ok_or_else(|| Error::unknown("document", id))?;
                self.docs[doc_idx].tokens.clear();
                current = Some(doc_idx);
                continue;
            }
            let doc_idx = current
                .ok_or_else(|| Error::parse(lineno, "annotation row before any #doc header"))?;
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let (surface, lemma, pos) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
            if surface.is_empty() || lemma.is_empty() {
                return Err(Error::parse(lineno, "empty surface or lemma"));
            }
            self.docs[doc_idx].tokens.push(AnnotatedToken {
                surface: surface.to_string(),
                lemma: lemma.to_string(),
                pos: pos.to_string(),
            });
        }
        Ok(())
    }

    /// Returns a copy keeping only tokens whose POS tag is allowed.
    ///
    /// Token order and lemma casing are preserved. An empty tag set is
    /// rejected: it would silently erase the corpus.
    pub fn apply_pos_filter(&self, allowed: &BTreeSet<String>) -> Result<Corpus> {
        if allowed.is_empty() {
            return Err(Error::Config("POS filter with an empty allowed set".into()));
        }
        let mut filtered = self.clone();
        for doc in &mut filtered.docs {
            doc.tokens.retain(|t| allowed.contains(&t.pos));
        }
        Ok(filtered)
    }

    /// Lemma-level statistics; an empty corpus yields all zeros.
    pub fn stats<F: Scalar>(&self) -> CorpusStats<F> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut total = 0usize;
        let mut unique_per_doc_sum = 0usize;
        for doc in &self.docs {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            for token in &doc.tokens {
                *counts.entry(token.lemma.as_str()).or_insert(0) += 1;
                seen.insert(token.lemma.as_str());
                total += 1;
            }
            unique_per_doc_sum += seen.len();
        }
        let unique = counts.len();
        let hapax = counts.values().filter(|&&c| c == 1).count();
        let n_docs = self.docs.len();
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                F::zero()
            } else {
                F::from_count(num) / F::from_count(den)
            }
        };
        CorpusStats {
            total_tokens: total,
            total_unique_tokens: unique,
            avg_tokens_per_doc: ratio(total, n_docs),
            avg_unique_tokens_per_doc: ratio(unique_per_doc_sum, n_docs),
            unique_token_ratio: ratio(unique, total),
            hapax_ratio: ratio(hapax, unique),
        }
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }
}

/// POS tags kept by default: nouns, verbs, and adjectives of the common
/// English tagset. The right set depends on the tagger and language, so it is
/// a configuration value, not a fixed truth.
pub const DEFAULT_ALLOWED_POS: &[&str] = &[
    "NN", "NNS", "NP", "NPS", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "JJ", "JJR", "JJS",
];

/// The default POS set as an owned tag set.
pub fn default_pos_filter() -> BTreeSet<String> {
    DEFAULT_ALLOWED_POS.iter().map(|s| s.to_string()).collect()
}
