//! One function per subcommand. Every command is self-contained: it loads
//! its inputs from the configuration, recomputes the stages it depends on,
//! and writes its artifacts plus a manifest into the output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use topcat::binarize::binarize_matrix;
use topcat::cluster::{
    concept_membership_features, conceptual_similarity, cut_maxclust, standardize_columns,
    standardize_features, ward_linkage, ClusterAssignment,
};
use topcat::corpus::Corpus;
use topcat::fca::{covering_relation, enumerate_concepts};
use topcat::llm::{
    run_llm_pipeline, write_transcript, CompletionClient, HttpCompletionClient, LabeledTopic,
    MockCompletionClient, PipelineConfig,
};
use topcat::terms::{
    build_term_matrix, fetch_disambiguation, filter_coherence, DisambiguationSource,
    FixtureSource, HttpSource, TermFrequencyMatrix, CANDIDATE_SELECTION, MATCHING_MODE,
};
use topcat::validity::{sweep, FeatureSource, SweepOptions};

use crate::config::{spec_slug, ResolvedConfig};
use crate::manifest::ManifestBuilder;
use crate::CliError;

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = out_dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn announce(out_dir: &Path, name: &str) {
    println!("wrote {}", out_dir.join(name).display());
}

fn load_corpus(cfg: &ResolvedConfig, with_annotations: bool) -> Result<Corpus, CliError> {
    let docs_dir = cfg.docs_dir()?;
    let mut corpus = Corpus::load_dir(docs_dir)?;
    if with_annotations {
        let path = cfg.config.dataset.annotations.as_ref().ok_or_else(|| {
            CliError::Config("dataset.annotations is required for this command".into())
        })?;
        let file = File::open(path)
            .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
        corpus.load_annotations(BufReader::new(file))?;
    }
    Ok(corpus)
}

fn disambiguation_source(
    cfg: &ResolvedConfig,
) -> Result<Box<dyn DisambiguationSource>, CliError> {
    let service_url = cfg
        .config
        .terms
        .service_url
        .clone()
        .or_else(|| std::env::var("TOPCAT_DISAMBIG_URL").ok());
    match service_url {
        Some(url) if !cfg.offline => {
            let key = cfg
                .api_key(&cfg.config.terms.api_key_env)
                .or_else(|| std::env::var("TOPCAT_DISAMBIG_API_KEY").ok());
            Ok(Box::new(HttpSource::new(url, key)?))
        }
        _ => {
            let path = cfg.config.terms.fixture.as_ref().ok_or_else(|| {
                CliError::Config(
                    "no disambiguation source: set terms.fixture (offline) or terms.service_url / TOPCAT_DISAMBIG_URL"
                        .into(),
                )
            })?;
            Ok(Box::new(FixtureSource::load(path)?))
        }
    }
}

fn extract_matrix(cfg: &ResolvedConfig) -> Result<TermFrequencyMatrix, CliError> {
    let corpus = load_corpus(cfg, false)?;
    let source = disambiguation_source(cfg)?;
    let terms = fetch_disambiguation(&corpus, source.as_ref(), cfg.jobs)?;
    let kept = filter_coherence(terms, cfg.config.terms.coherence_threshold)?;
    Ok(build_term_matrix(&kept, &corpus, cfg.config.terms.count_mode)?)
}

fn sweep_options(cfg: &ResolvedConfig) -> SweepOptions {
    SweepOptions {
        concept_ceiling: cfg.config.cluster.concept_ceiling,
        feature_source: cfg.config.cluster.feature_source,
    }
}

fn base_manifest(cfg: &ResolvedConfig, subcommand: &str) -> Result<ManifestBuilder, CliError> {
    let mut builder = ManifestBuilder::new(subcommand, &cfg.raw_toml)
        .param("strict", cfg.strict.to_string())
        .param("offline", cfg.offline.to_string());
    if let Ok(docs) = cfg.docs_dir() {
        builder = builder.input(docs);
    }
    Ok(builder)
}

pub fn stats(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let corpus = load_corpus(cfg, true)?;
    let filtered = corpus.apply_pos_filter(&cfg.allowed_pos())?;
    let stats = filtered.stats::<f64>();
    let mut w = create(out_dir, "stats.csv")?;
    writeln!(
        w,
        "total_tokens,total_unique_tokens,avg_tokens_per_doc,avg_unique_tokens_per_doc,unique_token_ratio,hapax_ratio"
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        stats.total_tokens,
        stats.total_unique_tokens,
        stats.avg_tokens_per_doc,
        stats.avg_unique_tokens_per_doc,
        stats.unique_token_ratio,
        stats.hapax_ratio
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    announce(out_dir, "stats.csv");
    let mut manifest = base_manifest(cfg, "stats")?;
    if let Some(annotations) = &cfg.config.dataset.annotations {
        manifest = manifest.input(annotations);
    }
    manifest.write(out_dir)
}

pub fn extract(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    let w = create(out_dir, "term_matrix.csv")?;
    matrix.to_csv(w)?;
    announce(out_dir, "term_matrix.csv");
    let mut manifest = base_manifest(cfg, "extract")?
        .param("matching", MATCHING_MODE)
        .param("candidates", CANDIDATE_SELECTION)
        .param("coherence_threshold", cfg.config.terms.coherence_threshold.to_string());
    if let Some(fixture) = &cfg.config.terms.fixture {
        manifest = manifest.input(fixture);
    }
    manifest.write(out_dir)
}

pub fn binarize(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    let mut retained_csv = create(out_dir, "retained_terms.csv")?;
    writeln!(retained_csv, "strategy,beta,retained_terms")
        .map_err(|e| CliError::Io(e.to_string()))?;
    for spec in cfg.specs()? {
        let context = binarize_matrix(&matrix, &spec)?;
        let slug = spec_slug(&spec);
        context.to_csv(create(out_dir, &format!("context_{slug}.csv"))?)?;
        context.to_burmeister(create(out_dir, &format!("context_{slug}.cxt"))?)?;
        announce(out_dir, &format!("context_{slug}.csv"));
        let (retained, _) = context.retained_terms();
        writeln!(retained_csv, "{},{},{}", spec.strategy, spec.beta, retained)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    retained_csv.flush().map_err(|e| CliError::Io(e.to_string()))?;
    announce(out_dir, "retained_terms.csv");
    base_manifest(cfg, "binarize")?.write(out_dir)
}

pub fn concepts(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    let ceiling = cfg.config.cluster.concept_ceiling;
    let mut counts = create(out_dir, "concept_counts.csv")?;
    writeln!(counts, "strategy,beta,retained_terms,concepts,hasse_edges")
        .map_err(|e| CliError::Io(e.to_string()))?;
    for spec in cfg.specs()? {
        let context = binarize_matrix(&matrix, &spec)?;
        let (retained, reduced) = context.retained_terms();
        let concept_set = enumerate_concepts(&reduced, ceiling)?;
        let edges = covering_relation(&concept_set);
        let slug = spec_slug(&spec);
        concept_set.to_jsonl(&reduced, create(out_dir, &format!("concepts_{slug}.jsonl"))?)?;
        announce(out_dir, &format!("concepts_{slug}.jsonl"));
        writeln!(
            counts,
            "{},{},{},{},{}",
            spec.strategy,
            spec.beta,
            retained,
            concept_set.len(),
            edges.len()
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    counts.flush().map_err(|e| CliError::Io(e.to_string()))?;
    announce(out_dir, "concept_counts.csv");
    base_manifest(cfg, "concepts")?.write(out_dir)
}

/// Term clusters for one spec and one k, as `(term set per cluster)`.
pub fn cluster_terms(
    cfg: &ResolvedConfig,
    matrix: &TermFrequencyMatrix,
    spec: &topcat::binarize::BinarizationSpec<f64>,
    k: usize,
) -> Result<(Vec<String>, ClusterAssignment), CliError> {
    let context = binarize_matrix(matrix, spec)?;
    let (_, reduced) = context.retained_terms();
    let concept_set = enumerate_concepts(&reduced, cfg.config.cluster.concept_ceiling)?;
    let features = match cfg.config.cluster.feature_source {
        FeatureSource::SimilarityRows => {
            let sim = conceptual_similarity::<f64>(&concept_set, reduced.attributes())?;
            standardize_features(&sim)?
        }
        FeatureSource::ConceptMembership => standardize_columns(concept_membership_features::<
            f64,
        >(
            &concept_set, reduced.attributes()
        )?)?,
    };
    let dendrogram = ward_linkage(&features)?;
    let assignment = cut_maxclust(&dendrogram, k)?;
    Ok((reduced.attributes().to_vec(), assignment))
}

pub fn cluster(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    for spec in cfg.specs()? {
        let context = binarize_matrix(&matrix, &spec)?;
        let (_, reduced) = context.retained_terms();
        let concept_set = enumerate_concepts(&reduced, cfg.config.cluster.concept_ceiling)?;
        let slug = spec_slug(&spec);
        let sim = conceptual_similarity::<f64>(&concept_set, reduced.attributes())?;
        sim.to_csv(create(out_dir, &format!("similarity_{slug}.csv"))?)?;
        announce(out_dir, &format!("similarity_{slug}.csv"));
        let features = match cfg.config.cluster.feature_source {
            FeatureSource::SimilarityRows => standardize_features(&sim)?,
            FeatureSource::ConceptMembership => standardize_columns(
                concept_membership_features::<f64>(&concept_set, reduced.attributes())?,
            )?,
        };
        let dendrogram = ward_linkage(&features)?;
        dendrogram.to_json(create(out_dir, &format!("dendrogram_{slug}.json"))?)?;
        announce(out_dir, &format!("dendrogram_{slug}.json"));
        for &k in &cfg.config.cluster.ks {
            let assignment = cut_maxclust(&dendrogram, k)?;
            let name = format!("assignments_{slug}_k{k}.csv");
            assignment.to_csv(reduced.attributes(), create(out_dir, &name)?)?;
            announce(out_dir, &name);
        }
    }
    base_manifest(cfg, "cluster")?.write(out_dir)
}

pub fn sweep_cmd(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    let specs = cfg.specs()?;
    let table = sweep(&matrix, &specs, &cfg.config.cluster.ks, &sweep_options(cfg));
    table.to_csv(create(out_dir, "sweep.csv")?)?;
    announce(out_dir, "sweep.csv");
    table.to_markdown(create(out_dir, "sweep.md")?)?;
    announce(out_dir, "sweep.md");
    base_manifest(cfg, "sweep")?.write(out_dir)
}

fn completion_client(cfg: &ResolvedConfig) -> Result<Box<dyn CompletionClient>, CliError> {
    let base_url = cfg
        .config
        .llm
        .base_url
        .clone()
        .or_else(|| std::env::var("TOPCAT_LLM_BASE_URL").ok());
    match base_url {
        Some(url) if !cfg.offline => {
            let model = cfg
                .config
                .llm
                .model
                .clone()
                .or_else(|| std::env::var("TOPCAT_LLM_MODEL").ok())
                .ok_or_else(|| {
                    CliError::Config("llm.model or TOPCAT_LLM_MODEL must name the model".into())
                })?;
            let key = cfg
                .api_key(&cfg.config.llm.api_key_env)
                .or_else(|| std::env::var("TOPCAT_LLM_API_KEY").ok());
            let client = HttpCompletionClient::new(url, model, key)?
                .with_temperature(cfg.config.llm.temperature);
            Ok(Box::new(client))
        }
        _ => {
            let dir = cfg.config.llm.mock_dir.as_ref().ok_or_else(|| {
                CliError::Config(
                    "no completion client: set llm.mock_dir (offline) or llm.base_url / TOPCAT_LLM_BASE_URL"
                        .into(),
                )
            })?;
            Ok(Box::new(MockCompletionClient::new(dir)))
        }
    }
}

fn run_llm(cfg: &ResolvedConfig) -> Result<(Vec<LabeledTopic>, Vec<topcat::llm::TranscriptEntry>), CliError> {
    let corpus = load_corpus(cfg, false)?;
    let client = completion_client(cfg)?;
    let pipeline_cfg =
        PipelineConfig::new(cfg.config.llm.batch_size).strict(cfg.strict).jobs(cfg.jobs);
    match run_llm_pipeline(&corpus, client.as_ref(), &pipeline_cfg) {
        Ok(outcome) => Ok((outcome.topics, outcome.transcript)),
        Err(e) => Err(CliError::Pipeline(e.to_string())),
    }
}

pub fn llm(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let (topics, transcript) = run_llm(cfg)?;
    let report = topcat::llm::render_report(&topics);
    fs::write(out_dir.join("llm_report.md"), report).map_err(|e| CliError::Io(e.to_string()))?;
    announce(out_dir, "llm_report.md");
    write_transcript(&transcript, create(out_dir, "llm_transcript.jsonl")?)?;
    announce(out_dir, "llm_transcript.jsonl");
    serde_json::to_writer_pretty(create(out_dir, "llm_topics.json")?, &topics)
        .map_err(|e| CliError::Io(e.to_string()))?;
    announce(out_dir, "llm_topics.json");
    let mut manifest = base_manifest(cfg, "llm")?
        .param("batch_size", cfg.config.llm.batch_size.to_string())
        .param("temperature", cfg.config.llm.temperature.to_string());
    if let Some(mock) = &cfg.config.llm.mock_dir {
        manifest = manifest.input(mock);
    }
    manifest.write(out_dir)
}

pub fn compare(cfg: &ResolvedConfig, out_dir: &Path) -> Result<(), CliError> {
    let matrix = extract_matrix(cfg)?;
    let spec = cfg.specs()?[0];
    let k = *cfg.config.cluster.ks.first().unwrap_or(&2);
    let (term_keys, assignment) = cluster_terms(cfg, &matrix, &spec, k)?;
    let (topics, _) = run_llm(cfg)?;

    let mut w = create(out_dir, "compare.md")?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(w, "# Topic comparison\n").map_err(io)?;
    writeln!(w, "## Term clusters (concept pipeline, strategy = {}, beta = {}, k = {})\n",
        spec.strategy, spec.beta, k)
        .map_err(io)?;
    writeln!(w, "| Topic | Terms |").map_err(io)?;
    writeln!(w, "|-------|-------|").map_err(io)?;
    for (label_idx, members) in assignment.members().iter().enumerate() {
        let terms: Vec<&str> = members.iter().map(|&t| term_keys[t].as_str()).collect();
        writeln!(w, "| {} | {} |", label_idx + 1, terms.join(", ")).map_err(io)?;
    }
    writeln!(w, "\n## Topics (completion pipeline, batch size = {})\n", cfg.config.llm.batch_size)
        .map_err(io)?;
    writeln!(w, "| Topic | Label / Terms |").map_err(io)?;
    writeln!(w, "|-------|---------------|").map_err(io)?;
    for topic in &topics {
        writeln!(
            w,
            "| {} | {} - {}<br>{} |",
            topic.topic.index,
            topic.label,
            topic.description,
            topic.topic.keywords.join(", ")
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    announce(out_dir, "compare.md");
    base_manifest(cfg, "compare")?.write(out_dir)
}
