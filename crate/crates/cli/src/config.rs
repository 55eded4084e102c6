//! Run configuration: a TOML file plus command-line overrides.
//!
//! Relative paths inside the file resolve against the directory containing
//! the config file, so fixture bundles stay relocatable.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use topcat::binarize::{BinarizationSpec, Strategy};
use topcat::terms::CountMode;
use topcat::validity::FeatureSource;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub pos: PosConfig,
    #[serde(default)]
    pub terms: TermsConfig,
    #[serde(default)]
    pub binarize: BinarizeConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub llm: LlmConfig,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub docs_dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PosConfig {
    /// POS tags kept by the filter; defaults to the common English
    /// noun/verb/adjective tags.
    pub allowed: Option<Vec<String>>,
}

fn default_coherence() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermsConfig {
    #[serde(default = "default_coherence")]
    pub coherence_threshold: f64,
    #[serde(default)]
    pub count_mode: CountMode,
    /// Offline disambiguation fixture (service response schema).
    pub fixture: Option<PathBuf>,
    /// Live disambiguation endpoint.
    pub service_url: Option<String>,
    /// Name of the environment variable holding the service API key.
    pub api_key_env: Option<String>,
}

impl Default for TermsConfig {
    fn default() -> Self {
        Self {
            coherence_threshold: default_coherence(),
            count_mode: CountMode::default(),
            fixture: None,
            service_url: None,
            api_key_env: None,
        }
    }
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Direct]
}

fn default_betas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizeConfig {
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
}

impl Default for BinarizeConfig {
    fn default() -> Self {
        Self { strategies: default_strategies(), betas: default_betas() }
    }
}

fn default_ks() -> Vec<usize> {
    vec![2]
}

fn default_ceiling() -> usize {
    topcat::fca::DEFAULT_CONCEPT_CEILING
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub feature_source: FeatureSource,
    #[serde(default = "default_ceiling")]
    pub concept_ceiling: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            ks: default_ks(),
            feature_source: FeatureSource::default(),
            concept_ceiling: default_ceiling(),
        }
    }
}

fn default_batch_size() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub model: Option<String>,
    pub base_url: Option<String>,
    /// Name of the environment variable holding the completion API key.
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    /// Replay directory for the deterministic mock client.
    pub mock_dir: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            batch_size: default_batch_size(),
            model: None,
            base_url: None,
            api_key_env: None,
            temperature: 0.0,
            mock_dir: None,
            strict: false,
        }
    }
}

/// The configuration after applying CLI overrides and path resolution.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    /// Raw TOML text, echoed into manifests.
    pub raw_toml: String,
    pub strict: bool,
    pub jobs: usize,
    pub offline: bool,
}

impl ResolvedConfig {
    pub fn load(
        path: &Path,
        strategies: &[Strategy],
        betas: &[f64],
        ks: &[usize],
        strict: bool,
        jobs: usize,
        offline: bool,
    ) -> Result<Self, CliError> {
        let raw_toml = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&raw_toml)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p {
                if inner.is_relative() {
                    *inner = base.join(&inner);
                }
            }
        };
        resolve(&mut config.dataset.docs_dir);
        resolve(&mut config.dataset.annotations);
        resolve(&mut config.terms.fixture);
        resolve(&mut config.llm.mock_dir);
        if !strategies.is_empty() {
            config.binarize.strategies = strategies.to_vec();
        }
        if !betas.is_empty() {
            config.binarize.betas = betas.to_vec();
        }
        if !ks.is_empty() {
            config.cluster.ks = ks.to_vec();
        }
        let strict = strict || config.llm.strict;
        let resolved = Self { config, raw_toml, strict, jobs, offline };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, path) in [
            ("dataset.docs_dir", &self.config.dataset.docs_dir),
            ("dataset.annotations", &self.config.dataset.annotations),
            ("terms.fixture", &self.config.terms.fixture),
            ("llm.mock_dir", &self.config.llm.mock_dir),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Config(format!(
                        "{name} points to a missing path: {}",
                        p.display()
                    )));
                }
            }
        }
        for &beta in &self.config.binarize.betas {
            if !beta.is_finite() || beta < 0.0 {
                return Err(CliError::Config(format!("beta {beta} must be finite and >= 0")));
            }
        }
        if self.config.binarize.strategies.is_empty() || self.config.binarize.betas.is_empty() {
            return Err(CliError::Config("no binarization strategies or betas configured".into()));
        }
        Ok(())
    }

    pub fn docs_dir(&self) -> Result<&Path, CliError> {
        self.config
            .dataset
            .docs_dir
            .as_deref()
            .ok_or_else(|| CliError::Config("dataset.docs_dir is not configured".into()))
    }

    pub fn allowed_pos(&self) -> BTreeSet<String> {
        match &self.config.pos.allowed {
            Some(tags) => tags.iter().cloned().collect(),
            None => topcat::corpus::default_pos_filter(),
        }
    }

    /// The strategy×beta cross product, in configuration order.
    pub fn specs(&self) -> Result<Vec<BinarizationSpec<f64>>, CliError> {
        let mut specs = Vec::new();
        for &strategy in &self.config.binarize.strategies {
            for &beta in &self.config.binarize.betas {
                specs.push(
                    BinarizationSpec::new(strategy, beta)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                );
            }
        }
        Ok(specs)
    }

    pub fn api_key(&self, env_name: &Option<String>) -> Option<String> {
        env_name.as_ref().and_then(|name| std::env::var(name).ok())
    }
}

/// File-name fragment for one binarization spec, e.g. `high_1.25`.
pub fn spec_slug(spec: &BinarizationSpec<f64>) -> String {
    format!("{}_{}", spec.strategy, spec.beta)
}
