//! Disambiguated term retrieval and the document×term frequency matrix.
//!
//! Terms come from an entity-linking service reached over HTTP, or from an
//! offline fixture file that mirrors the service response schema. Every term
//! carries a coherence score; downstream stages only see terms whose score
//! passes [`filter_coherence`].

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Matching mode requested from the disambiguation service; echoed into run
/// manifests for provenance.
pub const MATCHING_MODE: &str = "EXACT_MATCHING";
/// Candidate selection requested from the disambiguation service.
pub const CANDIDATE_SELECTION: &str = "TOP";

/// One disambiguated term occurrence as returned by the service.
///
/// `lemma_key` is the normalized identity used everywhere downstream: the
/// service-provided sense/lemma key when present, otherwise the lowercased
/// surface. No further normalization happens, so near-synonyms in different
/// languages stay distinct terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DisambiguatedTerm {
    pub doc_id: String,
    pub surface: String,
    #[serde(default)]
    pub lemma_key: String,
    pub coherence: f64,
    #[serde(default)]
    pub start: usize,
    #[serde(default)]
    pub end: usize,
}

impl DisambiguatedTerm {
    /// Fills an empty `lemma_key` with the lowercased surface.
    fn normalized(mut self) -> Self {
        if self.lemma_key.is_empty() {
            self.lemma_key = self.surface.to_lowercase();
        }
        self
    }
}

/// Source of disambiguated terms for a single document.
pub trait DisambiguationSource: Send + Sync {
    fn disambiguate(&self, doc: &Document) -> Result<Vec<DisambiguatedTerm>>;
}

/// Offline source backed by a single JSON file holding an array of
/// [`DisambiguatedTerm`] records (the same schema the HTTP service returns).
///
/// A document with no record at all in the file is treated as missing and
/// reported as a reference error; the fixture must cover the whole corpus.
pub struct FixtureSource {
    by_doc: HashMap<String, Vec<DisambiguatedTerm>>,
    path: PathBuf,
}

impl FixtureSource {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let raw = fs::read_to_string(&path)?;
        let records: Vec<DisambiguatedTerm> = serde_json::from_str(&raw)?;
        let mut by_doc: HashMap<String, Vec<DisambiguatedTerm>> = HashMap::new();
        for record in records {
            let record = record.normalized();
            by_doc.entry(record.doc_id.clone()).or_default().push(record);
        }
        Ok(Self { by_doc, path })
    }
}

impl DisambiguationSource for FixtureSource {
    fn disambiguate(&self, doc: &Document) -> Result<Vec<DisambiguatedTerm>> {
        self.by_doc
            .get(&doc.id)
            .cloned()
            .ok_or_else(|| {
                Error::unknown("document in fixture", format!("{} ({})", doc.id, self.path.display()))
            })
    }
}

/// HTTP JSON client for an entity-linking service.
///
/// Sends one POST per document with the cleaned text and the fixed
/// `matching`/`candidates` parameters; expects back an array of
/// [`DisambiguatedTerm`] records. Transient failures are retried with
/// exponential backoff up to `max_retries` extra attempts.
pub struct HttpSource {
    base_url: String,
    api_key: Option<String>,
    max_retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DisambiguationRequest<'a> {
    doc_id: &'a str,
    text: &'a str,
    matching: &'a str,
    candidates: &'a str,
}

impl HttpSource {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Service { attempts: 0, message: e.to_string() })?;
        Ok(Self {
            base_url: base_url.into(),
            api_key,
            max_retries: 3,
            backoff: Duration::from_millis(250),
            client,
        })
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn request_once(&self, doc: &Document) -> std::result::Result<Vec<DisambiguatedTerm>, String> {
        let body = DisambiguationRequest {
            doc_id: &doc.id,
            text: &doc.text,
            matching: MATCHING_MODE,
            candidates: CANDIDATE_SELECTION,
        };
        let mut req = self.client.post(&self.base_url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.json::<Vec<DisambiguatedTerm>>().map_err(|e| e.to_string())
    }
}

impl DisambiguationSource for HttpSource {
    fn disambiguate(&self, doc: &Document) -> Result<Vec<DisambiguatedTerm>> {
        let attempts = self.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.request_once(doc) {
                Ok(terms) => {
                    return Ok(terms.into_iter().map(DisambiguatedTerm::normalized).collect())
                }
                Err(msg) => last_error = msg,
            }
        }
        Err(Error::Service {
            attempts,
            message: format!("disambiguation of '{}' failed: {last_error}", doc.id),
        })
    }
}

/// Fetches terms for the whole corpus.
///
/// Documents are processed with at most `jobs` concurrent requests; the
/// result is assembled deterministically, sorted by document id and then by
/// the occurrence offset.
pub fn fetch_disambiguation(
    corpus: &Corpus,
    source: &dyn DisambiguationSource,
    jobs: usize,
) -> Result<Vec<DisambiguatedTerm>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let per_doc: Vec<Result<Vec<DisambiguatedTerm>>> = pool.install(|| {
        corpus
            .docs()
            .par_iter()
            .map(|doc| source.disambiguate(doc))
            .collect()
    });
    let mut terms = Vec::new();
    for result in per_doc {
        terms.extend(result?);
    }
    terms.sort_by(|a, b| {
        a.doc_id
            .cmp(&b.doc_id)
            .then(a.start.cmp(&b.start))
            .then(a.lemma_key.cmp(&b.lemma_key))
    });
    Ok(terms)
}

/// Keeps exactly the terms whose coherence is strictly greater than
/// `threshold` (a score equal to the threshold is dropped).
pub fn filter_coherence(
    terms: Vec<DisambiguatedTerm>,
    threshold: f64,
) -> Result<Vec<DisambiguatedTerm>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "coherence threshold {threshold} outside [0, 1]"
        )));
    }
    Ok(terms.into_iter().filter(|t| t.coherence > threshold).collect())
}

/// How occurrences of a term inside one document are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Every occurrence counts (the default).
    #[default]
    Occurrence,
    /// A term counts at most once per document.
    OncePerDocument,
}

/// Document×term occurrence counts. Rows follow corpus order; columns are
/// term keys in lexicographic order, and every column has at least one
/// nonzero entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TermFrequencyMatrix {
    doc_ids: Vec<String>,
    term_keys: Vec<String>,
    counts: Vec<u32>,
}

impl TermFrequencyMatrix {
    /// Builds a matrix from raw parts, dropping all-zero columns.
    pub fn new(doc_ids: Vec<String>, term_keys: Vec<String>, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != doc_ids.len() * term_keys.len() {
            return Err(Error::InvalidArgument(format!(
                "count buffer has {} cells for a {}x{} matrix",
                counts.len(),
                doc_ids.len(),
                term_keys.len()
            )));
        }
        for ids in [&doc_ids, &term_keys] {
            let mut seen = ids.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != ids.len() {
                return Err(Error::InvalidArgument("duplicate ids in matrix axis".into()));
            }
        }
        let matrix = Self { doc_ids, term_keys, counts };
        Ok(matrix.drop_zero_columns())
    }

    fn drop_zero_columns(self) -> Self {
        let keep: Vec<usize> = (0..self.term_keys.len())
            .filter(|&t| self.column(t).any(|c| c > 0))
            .collect();
        if keep.len() == self.term_keys.len() {
            return self;
        }
        let mut counts = Vec::with_capacity(self.doc_ids.len() * keep.len());
        for d in 0..self.doc_ids.len() {
            for &t in &keep {
                counts.push(self.counts[d * self.term_keys.len() + t]);
            }
        }
        let term_keys = keep.into_iter().map(|t| self.term_keys[t].clone()).collect();
        Self { doc_ids: self.doc_ids, term_keys, counts }
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn term_keys(&self) -> &[String] {
        &self.term_keys
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.term_keys.len()
    }

    pub fn count(&self, doc: usize, term: usize) -> u32 {
        self.counts[doc * self.term_keys.len() + term]
    }

    /// Iterates one term column over documents in row order.
    pub fn column(&self, term: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.doc_ids.len()).map(move |d| self.count(d, term))
    }

    /// Writes the matrix as CSV: `doc_id` column followed by one column per
    /// term key.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.term_keys.iter().cloned());
        w.write_record(&header)?;
        for (d, id) in self.doc_ids.iter().enumerate() {
            let mut record = vec![id.clone()];
            record.extend(self.column_free_row(d));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    fn column_free_row(&self, d: usize) -> Vec<String> {
        (0..self.term_keys.len()).map(|t| self.count(d, t).to_string()).collect()
    }

    /// Reads a matrix previously written by [`TermFrequencyMatrix::to_csv`].
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.is_empty() || &header[0] != "doc_id" {
            return Err(Error::parse(1, "term matrix CSV must start with a doc_id column"));
        }
        let term_keys: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();
        let mut doc_ids = Vec::new();
        let mut counts = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != term_keys.len() + 1 {
                return Err(Error::parse(i + 2, "row width does not match header"));
            }
            doc_ids.push(record[0].to_string());
            for cell in record.iter().skip(1) {
                let value: u32 = cell
                    .parse()
                    .map_err(|_| Error::parse(i + 2, format!("bad count '{cell}'")))?;
                counts.push(value);
            }
        }
        Self::new(doc_ids, term_keys, counts)
    }
}

/// Aggregates filtered terms into the frequency matrix.
///
/// Counts follow `mode`; the documents axis is the corpus order and the term
/// axis is sorted by lemma key, so the matrix does not depend on the order
/// the terms were fetched in. Terms referencing unknown documents are
/// reference errors.
pub fn build_term_matrix(
    terms: &[DisambiguatedTerm],
    corpus: &Corpus,
    mode: CountMode,
) -> Result<TermFrequencyMatrix> {
    let doc_ids: Vec<String> = corpus.docs().iter().map(|d| d.id.clone()).collect();
    let doc_index: HashMap<&str, usize> =
        doc_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut term_index: BTreeMap<&str, usize> = BTreeMap::new();
    for term in terms {
        if !doc_index.contains_key(term.doc_id.as_str()) {
            return Err(Error::unknown("document", &term.doc_id));
        }
        let next = term_index.len();
        term_index.entry(term.lemma_key.as_str()).or_insert(next);
    }
    // BTreeMap iteration order is the sorted order; rebuild dense indices.
    let term_keys: Vec<String> = term_index.keys().map(|k| k.to_string()).collect();
    let positions: HashMap<&str, usize> =
        term_keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let mut counts = vec![0u32; doc_ids.len() * term_keys.len()];
    for term in terms {
        let d = doc_index[term.doc_id.as_str()];
        let t = positions[term.lemma_key.as_str()];
        let cell = &mut counts[d * term_keys.len() + t];
        match mode {
            CountMode::Occurrence => *cell += 1,
            CountMode::OncePerDocument => *cell = 1,
        }
    }
    TermFrequencyMatrix::new(doc_ids, term_keys, counts)
}
