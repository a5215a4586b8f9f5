//! Run configuration: a JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use leakscope::classify::{ProbeHyper, ProbeKind};
use leakscope::cohort::DEFAULT_TEST_FRACTION;
use leakscope::embed::{Embedder, HashedNgramEmbedder, PrecomputedStore, DEFAULT_HASHED_DIM};
use leakscope::search::SearchConfig;
use leakscope::synth::SynthConfig;
use leakscope::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Hashed,
    Precomputed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    /// Hashed dimension. Ignored for precomputed embeddings, whose file
    /// header fixes the dimension.
    pub dim: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            kind: EmbedderKind::Hashed,
            dim: DEFAULT_HASHED_DIM,
        }
    }
}

/// Defaults for single-pairing audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortDefaults {
    pub max_size: usize,
    pub min_per_class: usize,
    pub test_fraction: f64,
}

impl Default for CohortDefaults {
    fn default() -> Self {
        CohortDefaults {
            max_size: 10_000,
            min_per_class: 25,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub top_k: usize,
    pub bottom_k: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            top_k: 10,
            bottom_k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub profiles: Option<PathBuf>,
    pub comments: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub embedder: EmbedderConfig,
    pub probes: Vec<ProbeKind>,
    pub hyper: ProbeHyper,
    pub cohort: CohortDefaults,
    pub search: SearchConfig,
    pub report: ReportConfig,
    pub synth: SynthConfig,
    /// Global seed. Overrides the seeds of the nested sections.
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profiles: None,
            comments: None,
            embeddings: None,
            output_dir: PathBuf::from("out"),
            embedder: EmbedderConfig::default(),
            probes: ProbeKind::ALL.to_vec(),
            hyper: ProbeHyper::default(),
            cohort: CohortDefaults::default(),
            search: SearchConfig::default(),
            report: ReportConfig::default(),
            synth: SynthConfig::default(),
            seed: 0,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Push the global seed into every section.
    pub fn propagate_seed(&mut self) {
        self.search.seed = self.seed;
        self.synth.seed = self.seed;
        self.hyper.logistic.seed = self.seed;
    }

    pub fn require_corpus(&self) -> Result<(&Path, &Path), Error> {
        let profiles = self
            .profiles
            .as_deref()
            .ok_or_else(|| Error::Config("no author profiles file given (--profiles)".into()))?;
        let comments = self
            .comments
            .as_deref()
            .ok_or_else(|| Error::Config("no comments file given (--comments)".into()))?;
        for p in [profiles, comments] {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok((profiles, comments))
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder>, Error> {
        Ok(match self.embedder.kind {
            EmbedderKind::Hashed => Box::new(HashedNgramEmbedder::new(self.embedder.dim)?),
            EmbedderKind::Precomputed => {
                let path = self
                    .embeddings
                    .as_deref()
                    .ok_or_else(|| Error::Config("precomputed embedder needs --embeddings".into()))?;
                Box::new(PrecomputedStore::load(path)?)
            }
        })
    }

    /// Every input file this configuration reads, for the run manifest.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut files: Vec<&Path> = [&self.profiles, &self.comments]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .collect();
        if self.embedder.kind == EmbedderKind::Precomputed {
            files.extend(self.embeddings.as_deref());
        }
        files
    }
}
