//! Run configuration, read from a JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::MdsOptions;
use crate::gateway::{Mode, ProviderConfig, SyntheticProvider};
use crate::prompt::StrategyKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {detail}")]
    Unreadable { path: String, detail: String },
    #[error("{path}: {detail}")]
    Malformed { path: String, detail: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ListPaths {
    pub occupations: Option<PathBuf>,
    pub hobbies: Option<PathBuf>,
    pub names: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub mds: MdsOptions,
    /// Scale both configurations to unit RMS radius before Procrustes.
    pub prescale: bool,
    /// CSV with columns value,x,y; defaults to the embedded ideal circumplex.
    pub human_reference: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            mds: MdsOptions::default(),
            prescale: true,
            human_reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub provider: ProviderConfig,
    pub strategy: StrategyKind,
    pub n_sessions: usize,
    pub temperature: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Root directory; each dataset gets its own subdirectory.
    pub output_dir: PathBuf,
    /// Sessions in flight at once.
    pub parallelism: usize,
    pub include_animal_welfare: bool,
    pub questionnaire: Option<PathBuf>,
    pub lists: ListPaths,
    pub synthetic: SyntheticProvider,
    /// Transcript store read by the replay provider.
    pub replay_store: Option<PathBuf>,
    pub strict_parsing: bool,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            provider: ProviderConfig::default(),
            strategy: StrategyKind::ValueAnchor,
            n_sessions: 300,
            temperature: 0.0,
            mode: Mode::Batch,
            seed: 7,
            output_dir: PathBuf::from("runs"),
            parallelism: 4,
            include_animal_welfare: false,
            questionnaire: None,
            lists: ListPaths::default(),
            synthetic: SyntheticProvider::default(),
            replay_store: None,
            strict_parsing: false,
            analysis: AnalysisConfig::default(),
        }
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

impl RunConfig {
    pub fn from_json_str(json: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(json).map_err(|e| ConfigError::Malformed {
            path: origin.to_string(),
            detail: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_sessions == 0 {
            return Err(ConfigError::Invalid("n_sessions must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        crate::gateway::check_temperature(self.temperature)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.analysis.mds.restarts == 0 {
            return Err(ConfigError::Invalid("analysis.mds.restarts must be at least 1".into()));
        }
        Ok(())
    }

    /// Model name as it will appear in transcripts.
    pub fn model_label(&self) -> String {
        use crate::gateway::{ProviderKind, Provider};
        match self.provider.kind {
            ProviderKind::Synthetic => self.synthetic.model_name().to_string(),
            _ if !self.provider.model_name.is_empty() => self.provider.model_name.clone(),
            ProviderKind::Replay => "replay".to_string(),
            ProviderKind::Live => "live".to_string(),
        }
    }

    /// `<output_dir>/<model>_<strategy>_t<temperature>_<mode>`
    pub fn dataset_dir(&self) -> PathBuf {
        self.output_dir.join(dataset_dir_name(&self.model_label(), self))
    }
}

/// Directory name for one (model, strategy, temperature, mode) dataset.
pub fn dataset_dir_name(model: &str, config: &RunConfig) -> String {
    format!(
        "{}_{}_t{}_{}",
        sanitize(model),
        config.strategy.slug(),
        config.temperature,
        config.mode
    )
}
