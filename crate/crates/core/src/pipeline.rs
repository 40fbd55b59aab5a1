//! The command-line workflows: collect, synth, analyze, figures, tables.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{human_reference_embedding, Embedding2D};
use crate::config::{ConfigError, RunConfig};
use crate::figures::{render_all, render_figures, FigureKind, FigureSpec};
use crate::gateway::{
    administer_all, build_provider, load_transcripts, record_transcripts, GatewayError, Provider,
};
use crate::model::{load_questionnaire, ModelError, Questionnaire};
use crate::parser::{assemble_dataset, write_dataset_csv, write_exclusions_csv, DatasetError, Exclusion, ParseOptions};
use crate::prompt::{bwvr_anchors, generate_personas, plan_run_set, ListPools, PlanInputs, PromptError, StrategyKind};
use crate::report::{analyze_dataset, load_reference_embedding, ReportError, StructureReport};
use crate::tables::export_tables;

pub const TRANSCRIPTS: &str = "transcripts.jsonl";
pub const REPORT: &str = "report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("provider error: {0}")]
    Provider(GatewayError),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Provider(_) => 3,
            PipelineError::Analysis(_) => 4,
        }
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<GatewayError> for PipelineError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Config(m) => PipelineError::Config(m),
            other => PipelineError::Provider(other),
        }
    }
}

impl From<PromptError> for PipelineError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::Gateway(g) => g.into(),
            other => PipelineError::Config(other.to_string()),
        }
    }
}

impl From<ReportError> for PipelineError {
    fn from(e: ReportError) -> Self {
        PipelineError::Analysis(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Analysis(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn questionnaire_for(config: &RunConfig) -> Result<Questionnaire, PipelineError> {
    Ok(match &config.questionnaire {
        Some(path) => load_questionnaire(path)?,
        None => Questionnaire::synthetic(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectOutcome {
    pub dataset_dir: PathBuf,
    pub store: PathBuf,
    /// Sessions administered by this invocation (excludes resumed ones).
    pub new_sessions: usize,
    pub exclusions: Vec<Exclusion>,
}

fn personas_for(
    config: &RunConfig,
    provider: &dyn Provider,
    dir: &Path,
) -> Result<Vec<String>, PipelineError> {
    if config.strategy != StrategyKind::GeneratedPersona {
        return Ok(Vec::new());
    }
    let path = dir.join("personas.json");
    if let Ok(text) = std::fs::read_to_string(&path) {
        let cached: Vec<String> = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
        if cached.len() >= config.n_sessions {
            return Ok(cached);
        }
    }
    let personas = generate_personas(config.n_sessions, provider, config.seed)?;
    let json = serde_json::to_string_pretty(&personas).expect("strings serialize");
    write_file(&path, json.as_bytes())?;
    Ok(personas)
}

fn write_dataset_files(dir: &Path, store: &Path, questionnaire: &Questionnaire, strict: bool) -> Result<(Vec<Exclusion>, Option<crate::parser::ResponseMatrix>), PipelineError> {
    let transcripts = load_transcripts(store).map_err(|e| io_err(store, e))?;
    let options = ParseOptions { strict };
    let (exclusions, matrix) = match assemble_dataset(&transcripts, questionnaire, options) {
        Ok(d) => (d.exclusions, Some(d.matrix)),
        Err(DatasetError::EmptyDataset) => {
            let ex = transcripts
                .iter()
                .filter_map(|t| crate::parser::parse_transcript(t, options).err().map(|e| Exclusion {
                    session_id: t.session_id,
                    error_kind: e.kind().to_string(),
                    detail: e.to_string(),
                }))
                .collect();
            (ex, None)
        }
        Err(e) => return Err(io_err(store, e)),
    };
    let mut buf = Vec::new();
    write_exclusions_csv(&mut buf, &exclusions).map_err(|e| io_err(dir, e))?;
    write_file(&dir.join("exclusions.csv"), &buf)?;
    if let Some(m) = &matrix {
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, m, questionnaire).map_err(|e| io_err(dir, e))?;
        write_file(&dir.join("dataset.csv"), &buf)?;
    }
    Ok((exclusions, matrix))
}

/// Plans and administers every session not yet in the store. Completed
/// sessions are persisted even when others fail.
pub fn collect_with(config: &RunConfig, provider: &dyn Provider) -> Result<CollectOutcome, PipelineError> {
    config.validate()?;
    let questionnaire = questionnaire_for(config)?;
    let dir = config
        .output_dir
        .join(crate::config::dataset_dir_name(provider.model_name(), config));
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let lists = ListPools::load(
        config.lists.occupations.as_deref(),
        config.lists.hobbies.as_deref(),
        config.lists.names.as_deref(),
    )?;
    let inputs = PlanInputs {
        anchors: bwvr_anchors(config.include_animal_welfare),
        lists,
        personas: personas_for(config, provider, &dir)?,
    };
    let plan = plan_run_set(config.strategy, config.n_sessions, config.seed, config.temperature, &inputs)?;

    let store = dir.join(TRANSCRIPTS);
    let done: HashSet<u32> = if store.exists() {
        load_transcripts(&store)
            .map_err(PipelineError::Provider)?
            .iter()
            .map(|t| t.session_id)
            .collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<_> = plan
        .sessions
        .iter()
        .filter(|s| !done.contains(&s.session_id))
        .cloned()
        .collect();
    tracing::info!(pending = pending.len(), resumed = done.len(), dir = %dir.display(), "collecting");

    let results = administer_all(&pending, &questionnaire, config.mode, provider, config.parallelism);
    let mut first_error = None;
    let mut ok = Vec::new();
    for r in results {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => {
                tracing::warn!(error = %e, "session failed");
                first_error.get_or_insert(e);
            }
        }
    }
    if !ok.is_empty() || !store.exists() {
        record_transcripts(&store, &ok).map_err(PipelineError::Provider)?;
    }
    let new_sessions = ok.len();
    let (exclusions, _) = write_dataset_files(&dir, &store, &questionnaire, config.strict_parsing)?;
    if let Some(e) = first_error {
        return Err(e.into());
    }
    Ok(CollectOutcome {
        dataset_dir: dir,
        store,
        new_sessions,
        exclusions,
    })
}

/// Collects with the provider the configuration names.
pub fn cmd_collect(config: &RunConfig) -> Result<CollectOutcome, PipelineError> {
    config.validate()?;
    let provider = build_provider(
        &config.provider,
        config.replay_store.as_deref(),
        config.synthetic.clone(),
    )?;
    collect_with(config, provider.as_ref())
}

/// Collects from the synthetic respondent, whatever provider is configured.
pub fn cmd_synth(config: &RunConfig) -> Result<CollectOutcome, PipelineError> {
    collect_with(config, &config.synthetic)
}

pub fn reference_embedding(config: &RunConfig) -> Result<Embedding2D, PipelineError> {
    match &config.analysis.human_reference {
        Some(path) => load_reference_embedding(path).map_err(|e| PipelineError::Config(e.to_string())),
        None => Ok(human_reference_embedding(config.seed, &config.analysis.mds)),
    }
}

/// Transcript stores directly under the output root, sorted.
pub fn discover(root: &Path, file: &str) -> Vec<PathBuf> {
    let mut found: Vec<PathBuf> = std::fs::read_dir(root)
        .into_iter()
        .flatten()
        .filter_map(Result::ok)
        .map(|e| e.path().join(file))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    found
}

fn dataset_name(store: &Path) -> String {
    store
        .parent()
        .and_then(|p| p.file_name())
        .map_or_else(|| "dataset".to_string(), |n| n.to_string_lossy().into_owned())
}

fn analyze_store(store: &Path, config: &RunConfig, reference: &Embedding2D, questionnaire: &Questionnaire) -> Result<PathBuf, PipelineError> {
    let name = dataset_name(store);
    let dir = config.output_dir.join(&name);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let transcripts = load_transcripts(store).map_err(|e| io_err(store, e))?;
    let data = assemble_dataset(&transcripts, questionnaire, ParseOptions { strict: config.strict_parsing })
        .map_err(|e| io_err(store, e))?;
    let report = analyze_dataset(&name, &data.matrix, data.exclusions.len(), reference, &config.analysis, config.seed);
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &data.matrix, questionnaire).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("dataset.csv"), &buf)?;
    let mut buf = Vec::new();
    write_exclusions_csv(&mut buf, &data.exclusions).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("exclusions.csv"), &buf)?;
    let path = dir.join(REPORT);
    write_file(&path, report.to_json().as_bytes())?;
    Ok(path)
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub reports: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, PipelineError)>,
}

/// Analyzes each store independently; one bad store does not stop the rest.
/// With no stores given, every store under the output root is used.
pub fn cmd_analyze(stores: &[PathBuf], config: &RunConfig) -> Result<AnalyzeOutcome, PipelineError> {
    let stores = if stores.is_empty() {
        discover(&config.output_dir, TRANSCRIPTS)
    } else {
        stores.to_vec()
    };
    if stores.is_empty() {
        return Err(PipelineError::Analysis(format!(
            "no transcript stores under {}",
            config.output_dir.display()
        )));
    }
    let reference = reference_embedding(config)?;
    let questionnaire = questionnaire_for(config)?;
    let results: Vec<_> = stores
        .par_iter()
        .map(|s| (s.clone(), analyze_store(s, config, &reference, &questionnaire)))
        .collect();
    let mut outcome = AnalyzeOutcome {
        reports: Vec::new(),
        failures: Vec::new(),
    };
    for (store, r) in results {
        match r {
            Ok(p) => outcome.reports.push(p),
            Err(e) => outcome.failures.push((store, e)),
        }
    }
    Ok(outcome)
}

fn reports_or_default(reports: &[PathBuf], config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let found = if reports.is_empty() {
        discover(&config.output_dir, REPORT)
    } else {
        reports.to_vec()
    };
    if found.is_empty() {
        return Err(PipelineError::Analysis(format!(
            "no reports under {}",
            config.output_dir.display()
        )));
    }
    Ok(found)
}

/// Renders one figure kind, or every applicable figure when `kind` is None.
pub fn cmd_figures(
    reports: &[PathBuf],
    kind: Option<FigureKind>,
    output: Option<&Path>,
    config: &RunConfig,
) -> Result<Vec<PathBuf>, PipelineError> {
    let inputs = reports_or_default(reports, config)?;
    let dir = config.output_dir.join("figures");
    Ok(match kind {
        Some(kind) => vec![render_figures(&FigureSpec {
            kind,
            inputs,
            output: output.map_or_else(|| dir.join(format!("{}.svg", kind.slug())), Path::to_path_buf),
        })?],
        None => render_all(&inputs, output.unwrap_or(&dir))?,
    })
}

pub fn cmd_tables(reports: &[PathBuf], dir: Option<&Path>, config: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let inputs = reports_or_default(reports, config)?;
    let loaded = inputs
        .iter()
        .map(StructureReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let dir = dir.map_or_else(|| config.output_dir.join("tables"), Path::to_path_buf);
    Ok(export_tables(&loaded, &dir)?)
}
