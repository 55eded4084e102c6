//! The three-prompt batched topic protocol: generate topics per document
//! batch, merge the batch results into exactly five final topics, then label
//! each topic.
//!
//! Prompts are fixed zero-shot templates with a single placeholder each; the
//! model must answer in a constrained line grammar (`Topic k: word, ...` for
//! topics, `Topic k : Label - Description` for labels) which the parsers in
//! this module read back. Strict mode rejects any stray prose, mirroring the
//! "nothing else" instruction in the templates; the default lenient mode
//! skips unrecognized lines. Every request and response is kept in a
//! transcript for provenance.

mod client;

pub use client::{
    request_hash, CompletionClient, HttpCompletionClient, MockCompletionClient,
    ScriptedCompletionClient,
};

use std::fmt;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use regex::Regex;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Topics requested per generation and merge call.
pub const TOPIC_COUNT: usize = 5;
/// Keywords requested per topic.
pub const KEYWORDS_PER_TOPIC: usize = 5;

/// Template for topic generation over a document batch.
pub const GENERATION_TEMPLATE: &str = "You are simulating a topic modeling system.\n\
Analyze the following set of documents and identify 5 topics.\n\
[DOCUMENTS]\n\
Each topic must be represented only by 5 keywords (1–2 words each).\n\
Return solely the results in the following format and nothing else:\n\
Topic k: word, word, word, word, word\n\
...";

/// Template for merging per-batch topics into the final five.
pub const MERGE_TEMPLATE: &str = "You are consolidating topic modeling results from multiple document batches.\n\
Each batch produced topics in the format \"Topic k: word, word, word, word, word\".\n\
Here are the topics:\n\
[BATCH RESULTS]\n\
Merge these results into exactly 5 final topics.\n\
- Each topic must contain exactly 5 keywords.\n\
- Keywords must be 1–2 words each.\n\
- Merge duplicates and synonyms into a single topic.\n\
- Favor topics that appear in multiple batches.\n\
- Discard topics that appear rarely.\n\
Return solely the final topics in the following format and nothing else:\n\
Topic k: word, word, word, word, word\n\
...";

/// Template for labeling the final topics.
pub const LABEL_TEMPLATE: &str = "You are labeling the final topics obtained from topic modeling.\n\
Here are the topics:\n\
[TOPICS]\n\
For each topic:\n\
- Assign a concise label (1–2 words).\n\
- Provide a one-sentence description that summarizes the topic.\n\
- Do not add explanations or commentary.\n\
Return solely the final labels in the following format and nothing else:\n\
Topic k : Label - Description\n\
...";

/// One extracted topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topic {
    pub index: usize,
    pub keywords: Vec<String>,
}

/// A topic with its label and one-sentence description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabeledTopic {
    pub topic: Topic,
    pub label: String,
    pub description: String,
}

/// Contiguous, order-preserving partition of the corpus into batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    batches: Vec<Vec<String>>,
    batch_size: usize,
}

impl BatchPlan {
    pub fn batches(&self) -> &[Vec<String>] {
        &self.batches
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }
}

/// Splits the corpus into contiguous batches of at most `batch_size`
/// documents (the last batch may be smaller). The size must be in `1..=10`.
pub fn make_batches(corpus: &Corpus, batch_size: usize) -> Result<BatchPlan> {
    if !(1..=10).contains(&batch_size) {
        return Err(Error::InvalidArgument(format!("batch size {batch_size} outside 1..=10")));
    }
    let ids: Vec<String> = corpus.docs().iter().map(|d| d.id.clone()).collect();
    let batches = ids.chunks(batch_size).map(|chunk| chunk.to_vec()).collect();
    Ok(BatchPlan { batches, batch_size })
}

/// The three prompt kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Generation,
    Merge,
    Label,
}

/// Substitutes the payload into the template for `kind`. The payload must be
/// nonempty: rendering an empty prompt is always a caller bug.
pub fn render_prompt(kind: PromptKind, payload: &str) -> Result<String> {
    if payload.trim().is_empty() {
        return Err(Error::InvalidArgument(format!("empty payload for {kind:?} prompt")));
    }
    let (template, placeholder) = match kind {
        PromptKind::Generation => (GENERATION_TEMPLATE, "[DOCUMENTS]"),
        PromptKind::Merge => (MERGE_TEMPLATE, "[BATCH RESULTS]"),
        PromptKind::Label => (LABEL_TEMPLATE, "[TOPICS]"),
    };
    Ok(template.replacen(placeholder, payload, 1))
}

/// Renders topics back into the line grammar the prompts demand.
pub fn format_topics(topics: &[Topic]) -> String {
    topics
        .iter()
        .map(|t| format!("Topic {}: {}", t.index, t.keywords.join(", ")))
        .collect::<Vec<_>>()
        .join("\n")
}

fn topic_line_regex() -> Regex {
    Regex::new(r"(?i)^\s*topic\s+(\d+)\s*:\s*(.*)$").expect("static regex compiles")
}

/// Parses `Topic <k>: kw, kw, ...` lines.
///
/// Lenient mode skips lines outside the grammar and accepts any keyword
/// count. Strict mode rejects every non-blank line that does not match
/// (reporting its line number) and requires exactly five keywords per topic.
/// Keywords longer than two words are only warned about; the outputs of real
/// models bend that rule too often to make it fatal.
pub fn parse_topic_lines(text: &str, strict: bool) -> Result<Vec<Topic>> {
    let re = topic_line_regex();
    let mut topics = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some(caps) = re.captures(line) else {
            if strict {
                return Err(Error::parse(lineno, format!("not a topic line: {:?}", line.trim())));
            }
            continue;
        };
        let index: usize = caps[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad topic index '{}'", &caps[1])))?;
        let mut keywords: Vec<String> =
            caps[2].split(',').map(|k| k.trim().to_string()).collect();
        keywords.retain(|k| !k.is_empty());
        if strict && keywords.len() != KEYWORDS_PER_TOPIC {
            return Err(Error::Validation(format!(
                "topic {index} has {} keyword(s), expected {KEYWORDS_PER_TOPIC}",
                keywords.len()
            )));
        }
        for keyword in &keywords {
            if keyword.split_whitespace().count() > 2 {
                log::warn!("topic {index}: keyword '{keyword}' exceeds two words");
            }
        }
        topics.push(Topic { index, keywords });
    }
    Ok(topics)
}

/// Parses `Topic <k> : Label - Description` lines against known topics.
///
/// The line splits at the first ` - ` after the colon, so dashes may appear
/// inside the description. Missing separators and empty labels are parse
/// errors; an index that matches no known topic is a reference error. Every
/// known topic must receive exactly one label. `strict` controls whether
/// unrecognized non-blank lines abort.
pub fn parse_label_lines(text: &str, topics: &[Topic], strict: bool) -> Result<Vec<LabeledTopic>> {
    let re = topic_line_regex();
    let mut labeled: Vec<Option<LabeledTopic>> = vec![None; topics.len()];
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some(caps) = re.captures(line) else {
            if strict {
                return Err(Error::parse(lineno, format!("not a label line: {:?}", line.trim())));
            }
            continue;
        };
        let index: usize = caps[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad topic index '{}'", &caps[1])))?;
        let rest = &caps[2];
        let Some((label, description)) = rest.split_once(" - ") else {
            return Err(Error::parse(lineno, format!("missing ' - ' separator in {rest:?}")));
        };
        let label = label.trim().to_string();
        let description = description.trim().to_string();
        if label.is_empty() {
            return Err(Error::Validation(format!("topic {index} has an empty label")));
        }
        let slot = topics
            .iter()
            .position(|t| t.index == index)
            .ok_or_else(|| Error::unknown("topic index", index.to_string()))?;
        if labeled[slot].is_some() {
            return Err(Error::Validation(format!("topic {index} labeled twice")));
        }
        labeled[slot] =
            Some(LabeledTopic { topic: topics[slot].clone(), label, description });
    }
    let mut out = Vec::with_capacity(topics.len());
    for (slot, entry) in labeled.into_iter().enumerate() {
        out.push(entry.ok_or_else(|| {
            Error::Validation(format!("topic {} received no label", topics[slot].index))
        })?);
    }
    Ok(out)
}

/// Pipeline stage names used in errors and transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generation,
    Merge,
    Label,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Generation => f.write_str("generation"),
            Stage::Merge => f.write_str("merge"),
            Stage::Label => f.write_str("label"),
        }
    }
}

/// One request/response exchange. `unix_time` is omitted for deterministic
/// clients so replayed runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    pub prompt: String,
    pub response: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unix_time: Option<f64>,
}

/// Writes a transcript as JSON lines.
pub fn write_transcript<W: Write>(entries: &[TranscriptEntry], mut writer: W) -> Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut writer, entry)?;
        writeln!(writer)?;
    }
    Ok(())
}

/// A pipeline failure, attributed to its stage and carrying the exchanges
/// completed before (and including) the failing one.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub batch: Option<usize>,
    pub source: Error,
    pub transcript: Vec<TranscriptEntry>,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.batch {
            Some(batch) => {
                write!(f, "{} stage failed for batch {}: {}", self.stage, batch, self.source)
            }
            None => write!(f, "{} stage failed: {}", self.stage, self.source),
        }
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Settings for one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub batch_size: usize,
    /// Reject stray prose and wrong topic/keyword counts.
    pub strict: bool,
    /// Upper bound on concurrent generation calls. Merge and label always
    /// run sequentially after all generations complete.
    pub jobs: usize,
}

impl PipelineConfig {
    pub fn new(batch_size: usize) -> Self {
        Self { batch_size, strict: false, jobs: 1 }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }
}

/// The result of a full pipeline run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub topics: Vec<LabeledTopic>,
    pub transcript: Vec<TranscriptEntry>,
    /// Total completion calls made: `ceil(docs / batch_size) + 2`.
    pub calls: usize,
}

fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

struct Exchange {
    entry: TranscriptEntry,
    outcome: Result<String>,
}

fn run_call(
    client: &dyn CompletionClient,
    stage: Stage,
    batch: Option<usize>,
    prompt: String,
) -> Exchange {
    let outcome = client.complete(&prompt);
    let response = outcome.as_ref().map(|r| r.clone()).unwrap_or_default();
    let unix_time = if client.deterministic() { None } else { Some(now_unix()) };
    Exchange { entry: TranscriptEntry { stage, batch, prompt, response, unix_time }, outcome }
}

/// Runs the whole protocol: per-batch generation, one merge, one label.
///
/// Batch payloads are the cleaned document texts separated by blank lines;
/// the merge payload concatenates each batch's topics in batch order, also
/// blank-line separated. Returns exactly [`TOPIC_COUNT`] labeled topics, or
/// the first failure with its stage and partial transcript.
pub fn run_llm_pipeline(
    corpus: &Corpus,
    client: &dyn CompletionClient,
    config: &PipelineConfig,
) -> std::result::Result<PipelineOutcome, Box<PipelineError>> {
    let mut transcript: Vec<TranscriptEntry> = Vec::new();
    let fail = |stage: Stage,
                batch: Option<usize>,
                source: Error,
                transcript: &[TranscriptEntry]| {
        Box::new(PipelineError { stage, batch, source, transcript: to_owned(transcript) })
    };
    fn to_owned(entries: &[TranscriptEntry]) -> Vec<TranscriptEntry> {
        entries.to_vec()
    }

    let plan = match make_batches(corpus, config.batch_size) {
        Ok(plan) => plan,
        Err(e) => return Err(fail(Stage::Generation, None, e, &transcript)),
    };

    // Generation: render all prompts first, then execute with a bounded pool.
    let mut prompts = Vec::with_capacity(plan.batches().len());
    for (index, batch) in plan.batches().iter().enumerate() {
        let payload = batch
            .iter()
            .map(|id| corpus.get(id).expect("batch ids come from the corpus").text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        match render_prompt(PromptKind::Generation, &payload) {
            Ok(prompt) => prompts.push(prompt),
            Err(e) => return Err(fail(Stage::Generation, Some(index), e, &transcript)),
        }
    }
    let exchanges: Vec<Exchange> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .expect("generation thread pool");
        use rayon::prelude::*;
        pool.install(|| {
            prompts
                .into_par_iter()
                .enumerate()
                .map(|(i, prompt)| run_call(client, Stage::Generation, Some(i), prompt))
                .collect()
        })
    } else {
        prompts
            .into_iter()
            .enumerate()
            .map(|(i, prompt)| run_call(client, Stage::Generation, Some(i), prompt))
            .collect()
    };

    let mut batch_topics: Vec<Vec<Topic>> = Vec::with_capacity(exchanges.len());
    for (index, exchange) in exchanges.into_iter().enumerate() {
        transcript.push(exchange.entry);
        let response = match exchange.outcome {
            Ok(response) => response,
            Err(e) => return Err(fail(Stage::Generation, Some(index), e, &transcript)),
        };
        match parse_topic_lines(&response, config.strict) {
            Ok(topics) if topics.is_empty() => {
                return Err(fail(
                    Stage::Generation,
                    Some(index),
                    Error::Validation("response contained no topic lines".into()),
                    &transcript,
                ))
            }
            Ok(topics) => batch_topics.push(topics),
            Err(e) => return Err(fail(Stage::Generation, Some(index), e, &transcript)),
        }
    }

    // Merge: batch results concatenated in batch order, blank-line separated.
    let merge_payload =
        batch_topics.iter().map(|t| format_topics(t)).collect::<Vec<_>>().join("\n\n");
    let merge_prompt = match render_prompt(PromptKind::Merge, &merge_payload) {
        Ok(p) => p,
        Err(e) => return Err(fail(Stage::Merge, None, e, &transcript)),
    };
    let exchange = run_call(client, Stage::Merge, None, merge_prompt);
    transcript.push(exchange.entry);
    let merged_text = match exchange.outcome {
        Ok(r) => r,
        Err(e) => return Err(fail(Stage::Merge, None, e, &transcript)),
    };
    let final_topics = match parse_topic_lines(&merged_text, config.strict) {
        Ok(topics) => topics,
        Err(e) => return Err(fail(Stage::Merge, None, e, &transcript)),
    };
    if config.strict && final_topics.len() != TOPIC_COUNT {
        return Err(fail(
            Stage::Merge,
            None,
            Error::Validation(format!(
                "merge produced {} topics, expected {TOPIC_COUNT}",
                final_topics.len()
            )),
            &transcript,
        ));
    }
    if final_topics.is_empty() {
        return Err(fail(
            Stage::Merge,
            None,
            Error::Validation("merge produced no topics".into()),
            &transcript,
        ));
    }

    // Label.
    let label_prompt = match render_prompt(PromptKind::Label, &format_topics(&final_topics)) {
        Ok(p) => p,
        Err(e) => return Err(fail(Stage::Label, None, e, &transcript)),
    };
    let exchange = run_call(client, Stage::Label, None, label_prompt);
    transcript.push(exchange.entry);
    let label_text = match exchange.outcome {
        Ok(r) => r,
        Err(e) => return Err(fail(Stage::Label, None, e, &transcript)),
    };
    let topics = match parse_label_lines(&label_text, &final_topics, config.strict) {
        Ok(labeled) => labeled,
        Err(e) => return Err(fail(Stage::Label, None, e, &transcript)),
    };

    let calls = transcript.len();
    Ok(PipelineOutcome { topics, transcript, calls })
}

/// Renders the final topics as a Markdown report.
pub fn render_report(topics: &[LabeledTopic]) -> String {
    let mut out = String::from("# Topics\n");
    for t in topics {
        out.push_str(&format!("\n## Topic {}: {}\n\n{}\n\nKeywords: {}\n",
            t.topic.index,
            t.label,
            t.description,
            t.topic.keywords.join(", ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus_of(n: usize) -> Corpus {
        Corpus::from_texts((0..n).map(|i| (format!("d{i}"), format!("document {i} text"))))
            .unwrap()
    }

    #[test]
    fn batches_partition_in_order() {
        let plan = make_batches(&corpus_of(8), 3).unwrap();
        let sizes: Vec<usize> = plan.batches().iter().map(|b| b.len()).collect();
        assert_eq!(sizes, [3, 3, 2]);
        assert_eq!(plan.batches()[0], ["d0", "d1", "d2"]);

        let single = make_batches(&corpus_of(8), 10).unwrap();
        assert_eq!(single.batches().len(), 1);
    }

    #[test]
    fn batch_size_bounds() {
        assert!(make_batches(&corpus_of(4), 0).is_err());
        assert!(make_batches(&corpus_of(4), 11).is_err());
    }

    #[test]
    fn generation_prompt_begins_with_template_header() {
        let prompt = render_prompt(PromptKind::Generation, "doc body").unwrap();
        assert!(prompt.starts_with("You are simulating a topic modeling system."));
        assert!(prompt.contains("doc body"));
        assert!(!prompt.contains("[DOCUMENTS]"));
    }

    #[test]
    fn merge_prompt_keeps_instructions() {
        let prompt = render_prompt(PromptKind::Merge, "Topic 1: a, b, c, d, e").unwrap();
        assert!(prompt.contains("Merge duplicates and synonyms"));
    }

    #[test]
    fn empty_payload_is_rejected() {
        assert!(render_prompt(PromptKind::Label, "  ").is_err());
    }

    #[test]
    fn parse_topic_basic_line() {
        let topics = parse_topic_lines("Topic 1: a, b, c, d, e", true).unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].index, 1);
        assert_eq!(topics[0].keywords, ["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn parse_topic_multiword_keywords() {
        let topics =
            parse_topic_lines("Topic 2: mvc, symfony, twig, rest, framework", true).unwrap();
        assert_eq!(topics[0].keywords.len(), 5);
        let multi = parse_topic_lines("topic 3: web server, php code, a, b, c", true).unwrap();
        assert_eq!(multi[0].keywords[0], "web server");
    }

    #[test]
    fn parse_topic_strict_rejects_prose() {
        let err = parse_topic_lines("Topics: a b c", true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
        // Lenient mode skips the same line.
        assert!(parse_topic_lines("Topics: a b c", false).unwrap().is_empty());
    }

    #[test]
    fn parse_topic_strict_enforces_keyword_count() {
        let err = parse_topic_lines("Topic 4: a, b, c", true).unwrap_err();
        match err {
            Error::Validation(message) => assert!(message.contains("topic 4")),
            other => panic!("expected validation error, got {other}"),
        }
        assert_eq!(parse_topic_lines("Topic 4: a, b, c", false).unwrap()[0].keywords.len(), 3);
    }

    #[test]
    fn parse_topic_ignores_blank_lines_and_whitespace() {
        let text = "\n  Topic 1: a, b, c, d, e  \n\n";
        let topics = parse_topic_lines(text, true).unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].keywords[4], "e");
    }

    fn five_topics() -> Vec<Topic> {
        (1..=5)
            .map(|i| Topic {
                index: i,
                keywords: (0..5).map(|k| format!("kw{i}{k}")).collect(),
            })
            .collect()
    }

    #[test]
    fn parse_label_example() {
        let topics = five_topics();
        let text = "Topic 1 : L1 - D1\nTopic 2 : L2 - D2\nTopic 3 : L3 - D3\n\
                    Topic 4 : L4 - D4\nTopic 5 : Sessions - Session handling, cookies, login, and security persistence";
        let labeled = parse_label_lines(text, &topics, true).unwrap();
        assert_eq!(labeled[4].label, "Sessions");
        assert!(labeled[4].description.starts_with("Session handling"));
    }

    #[test]
    fn parse_label_splits_on_first_separator() {
        let topics = vec![five_topics()[0].clone()];
        let labeled = parse_label_lines("Topic 1 : X - Y - Z", &topics, true).unwrap();
        assert_eq!(labeled[0].label, "X");
        assert_eq!(labeled[0].description, "Y - Z");
    }

    #[test]
    fn parse_label_missing_separator_is_parse_error() {
        let topics = vec![five_topics()[0].clone()];
        assert!(matches!(
            parse_label_lines("Topic 1 : NoSeparator", &topics, true),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn parse_label_unknown_index_is_reference_error() {
        let topics = vec![five_topics()[0].clone()];
        assert!(matches!(
            parse_label_lines("Topic 9 : L - D", &topics, true),
            Err(Error::UnknownId { .. })
        ));
    }

    #[test]
    fn parse_label_requires_full_coverage() {
        let topics = five_topics();
        let err = parse_label_lines("Topic 1 : L - D", &topics, true).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    fn canned_generation(batch: usize) -> String {
        (1..=5)
            .map(|i| {
                format!(
                    "Topic {i}: alpha{batch}{i}, beta{batch}{i}, gamma{batch}{i}, delta{batch}{i}, eps{batch}{i}"
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn canned_merge() -> String {
        (1..=5)
            .map(|i| format!("Topic {i}: m{i}a, m{i}b, m{i}c, m{i}d, m{i}e"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn canned_labels() -> String {
        (1..=5).map(|i| format!("Topic {i} : Label{i} - Description {i}")).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn pipeline_call_count_and_round_trip() {
        let corpus = corpus_of(8);
        let responses = vec![
            canned_generation(0),
            canned_generation(1),
            canned_generation(2),
            canned_merge(),
            canned_labels(),
        ];
        let client = ScriptedCompletionClient::new(responses);
        let outcome =
            run_llm_pipeline(&corpus, &client, &PipelineConfig::new(3).strict(true)).unwrap();
        assert_eq!(outcome.calls, 5); // ceil(8/3) + 2
        assert_eq!(outcome.topics.len(), 5);
        for topic in &outcome.topics {
            assert_eq!(topic.topic.keywords.len(), 5);
            assert!(!topic.label.is_empty());
        }
        assert_eq!(outcome.transcript.len(), 5);
        // Deterministic client: no timestamps in the transcript.
        assert!(outcome.transcript.iter().all(|e| e.unix_time.is_none()));
    }

    #[test]
    fn pipeline_attributes_merge_validation_failure() {
        let corpus = corpus_of(4);
        let responses = vec![
            canned_generation(0),
            canned_generation(1),
            // Merge returns only 4 topics.
            (1..=4)
                .map(|i| format!("Topic {i}: a{i}, b{i}, c{i}, d{i}, e{i}"))
                .collect::<Vec<_>>()
                .join("\n"),
        ];
        let client = ScriptedCompletionClient::new(responses);
        let err =
            run_llm_pipeline(&corpus, &client, &PipelineConfig::new(2).strict(true)).unwrap_err();
        assert_eq!(err.stage, Stage::Merge);
        assert!(matches!(err.source, Error::Validation(_)));
        // Transcript keeps everything up to and including the failing call.
        assert_eq!(err.transcript.len(), 3);
    }

    #[test]
    fn pipeline_attributes_generation_failure_with_batch() {
        let corpus = corpus_of(4);
        let responses = vec![canned_generation(0), "no topics here".to_string()];
        let client = ScriptedCompletionClient::new(responses);
        let err =
            run_llm_pipeline(&corpus, &client, &PipelineConfig::new(2).strict(true)).unwrap_err();
        assert_eq!(err.stage, Stage::Generation);
        assert_eq!(err.batch, Some(1));
    }

    #[test]
    fn report_is_deterministic() {
        let topics = vec![LabeledTopic {
            topic: Topic { index: 1, keywords: vec!["a".into(), "b".into()] },
            label: "L".into(),
            description: "D".into(),
        }];
        assert_eq!(render_report(&topics), render_report(&topics));
        assert!(render_report(&topics).contains("## Topic 1: L"));
    }

    proptest! {
        #[test]
        fn format_then_parse_round_trips(
            count in 1usize..6,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let topics: Vec<Topic> = (1..=count)
                .map(|i| Topic {
                    index: i,
                    keywords: (0..5)
                        .map(|_| {
                            let len = rng.random_range(1..=2);
                            (0..len)
                                .map(|_| {
                                    let c = (b'a' + rng.random_range(0..26u8)) as char;
                                    format!("{c}{}", rng.random_range(0..100))
                                })
                                .collect::<Vec<_>>()
                                .join(" ")
                        })
                        .collect(),
                })
                .collect();
            let rendered = format_topics(&topics);
            let parsed = parse_topic_lines(&rendered, true).unwrap();
            prop_assert_eq!(parsed, topics);
        }

        #[test]
        fn parser_tolerates_trailing_whitespace_and_blanks(padding in "[ \t]{0,4}") {
            let text = format!("Topic 1: a, b, c, d, e{padding}\n\n{padding}\n");
            let topics = parse_topic_lines(&text, true).unwrap();
            prop_assert_eq!(topics.len(), 1);
        }
    }
}
