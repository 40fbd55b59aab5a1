//! Administering a rendered prompt and the questionnaire to a response
//! provider, in batch (one exchange) or serial (one exchange per item) mode.
//!
//! Three providers ship with the crate:
//!
//! * [`LiveProvider`] speaks a chat-completion HTTP+JSON interface.
//! * [`SyntheticProvider`] answers from a cosine circumplex model; it is the
//!   oracle the analysis is validated against.
//! * [`ReplayProvider`] returns previously recorded transcripts verbatim.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Gender, Questionnaire, QuestionnaireItem, SCALE_MAX, SCALE_MIN};
use crate::parser::{self, ParseOptions};
use crate::prompt::{mix_seed, render_prompt, PromptError, PromptStrategy, SessionSpec};

pub const DEFAULT_CREDENTIAL_ENV: &str = "VALUE_PROBE_API_KEY";
const REDACTED: &str = "[REDACTED]";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("transport error (status {status:?}): {detail}")]
    Transport { status: Option<u16>, detail: String },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("gave up after {attempts} attempts: {detail}")]
    RetryExhausted { attempts: u32, detail: String },
    #[error("provider rejected the accumulated context: {0}")]
    ContextOverflow(String),
    #[error("session {session_id}: recorded in {found} mode, requested {requested}")]
    ModeMismatch {
        session_id: u32,
        requested: Mode,
        found: Mode,
    },
    #[error("no recording for {0}")]
    NotRecorded(String),
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("configuration: {0}")]
    Config(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("line {line}: corrupt transcript record: {detail}")]
    CorruptRecord { line: usize, detail: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GatewayError {
    fn from(e: std::io::Error) -> Self {
        GatewayError::Io(e.to_string())
    }
}

impl From<PromptError> for GatewayError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::Gateway(g) => g,
            other => GatewayError::Prompt(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Batch,
    Serial,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Batch => "batch",
            Mode::Serial => "serial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Why a completion is being requested. Live endpoints only see the
/// messages; the synthetic and replay providers key off this.
#[derive(Debug, Clone)]
pub enum RequestPurpose<'a> {
    Questionnaire {
        session: &'a SessionSpec,
        mode: Mode,
        turn: usize,
        items: &'a [QuestionnaireItem],
    },
    Persona {
        index: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub messages: &'a [ChatMessage],
    pub temperature: f64,
    pub purpose: RequestPurpose<'a>,
}

pub trait Provider: Send + Sync {
    fn model_name(&self) -> &str;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, GatewayError>;

    /// A stored transcript for the session, if this provider replays recordings.
    fn recorded(
        &self,
        _session_id: u32,
        _mode: Mode,
    ) -> Option<Result<SessionTranscript, GatewayError>> {
        None
    }

    /// Strings that must never reach a transcript or a log line.
    fn secrets(&self) -> Vec<String> {
        Vec::new()
    }

    /// Whether transcripts get wall-clock timestamps. Offline providers
    /// leave them at zero so stores are reproducible byte for byte.
    fn records_time(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: String,
    pub completion: String,
}

/// Wall-clock milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_ms: u64,
    pub finished_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub session_id: u32,
    pub model: String,
    pub strategy: PromptStrategy,
    pub gender_version: Gender,
    pub mode: Mode,
    pub temperature: f64,
    pub raw_exchanges: Vec<Exchange>,
    pub timestamps: Timestamps,
    pub parsed_scores: Option<Vec<u8>>,
}

impl SessionTranscript {
    /// Replaces every occurrence of each secret in prompts and completions.
    pub fn scrub(&mut self, secrets: &[String]) {
        for secret in secrets.iter().filter(|s| !s.is_empty()) {
            for ex in &mut self.raw_exchanges {
                if ex.prompt.contains(secret.as_str()) {
                    ex.prompt = ex.prompt.replace(secret.as_str(), REDACTED);
                }
                if ex.completion.contains(secret.as_str()) {
                    ex.completion = ex.completion.replace(secret.as_str(), REDACTED);
                }
            }
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn numbered_item(item: &QuestionnaireItem, gender: Gender) -> String {
    format!("{}. {}", item.index, item.text(gender))
}

fn finish(
    provider: &dyn Provider,
    session: &SessionSpec,
    mode: Mode,
    raw_exchanges: Vec<Exchange>,
    started_ms: u64,
) -> SessionTranscript {
    let timestamps = if provider.records_time() {
        Timestamps {
            started_ms,
            finished_ms: now_ms(),
        }
    } else {
        Timestamps::default()
    };
    let mut t = SessionTranscript {
        session_id: session.session_id,
        model: provider.model_name().to_string(),
        strategy: session.strategy.clone(),
        gender_version: session.gender_version,
        mode,
        temperature: session.temperature,
        raw_exchanges,
        timestamps,
        parsed_scores: None,
    };
    t.scrub(&provider.secrets());
    t.parsed_scores = parser::parse_transcript(&t, ParseOptions::default())
        .ok()
        .map(Vec::from);
    t
}

fn scrub_error(err: GatewayError, secrets: &[String]) -> GatewayError {
    let clean = |s: String| {
        secrets
            .iter()
            .filter(|x| !x.is_empty())
            .fold(s, |acc, x| acc.replace(x.as_str(), REDACTED))
    };
    match err {
        GatewayError::Transport { status, detail } => GatewayError::Transport {
            status,
            detail: clean(detail),
        },
        GatewayError::RetryExhausted { attempts, detail } => GatewayError::RetryExhausted {
            attempts,
            detail: clean(detail),
        },
        GatewayError::ContextOverflow(d) => GatewayError::ContextOverflow(clean(d)),
        other => other,
    }
}

/// Sends the strategy prompt followed by all items in a single message.
pub fn administer_batch(
    prompt: &str,
    questionnaire: &Questionnaire,
    session: &SessionSpec,
    provider: &dyn Provider,
) -> Result<SessionTranscript, GatewayError> {
    if let Some(recorded) = provider.recorded(session.session_id, Mode::Batch) {
        return recorded;
    }
    let started = now_ms();
    let items: Vec<String> = questionnaire
        .items()
        .iter()
        .map(|item| numbered_item(item, session.gender_version))
        .collect();
    let text = format!("{prompt}\n\n{}", items.join("\n"));
    let messages = [ChatMessage::user(text.clone())];
    let completion = provider
        .complete(&CompletionRequest {
            messages: &messages,
            temperature: session.temperature,
            purpose: RequestPurpose::Questionnaire {
                session,
                mode: Mode::Batch,
                turn: 0,
                items: questionnaire.items(),
            },
        })
        .map_err(|e| scrub_error(e, &provider.secrets()))?;
    Ok(finish(
        provider,
        session,
        Mode::Batch,
        vec![Exchange {
            prompt: text,
            completion,
        }],
        started,
    ))
}

/// Asks one item per turn inside a single growing conversation; the whole
/// conversation so far is resent on every turn.
pub fn administer_serial(
    prompt: &str,
    questionnaire: &Questionnaire,
    session: &SessionSpec,
    provider: &dyn Provider,
) -> Result<SessionTranscript, GatewayError> {
    if let Some(recorded) = provider.recorded(session.session_id, Mode::Serial) {
        return recorded;
    }
    let started = now_ms();
    let mut messages: Vec<ChatMessage> = Vec::with_capacity(2 * questionnaire.items().len());
    let mut exchanges = Vec::with_capacity(questionnaire.items().len());
    for (turn, item) in questionnaire.items().iter().enumerate() {
        let line = numbered_item(item, session.gender_version);
        let text = if turn == 0 {
            format!("{prompt}\n\n{line}")
        } else {
            line
        };
        messages.push(ChatMessage::user(text.clone()));
        let completion = provider
            .complete(&CompletionRequest {
                messages: &messages,
                temperature: session.temperature,
                purpose: RequestPurpose::Questionnaire {
                    session,
                    mode: Mode::Serial,
                    turn,
                    items: std::slice::from_ref(item),
                },
            })
            .map_err(|e| scrub_error(e, &provider.secrets()))?;
        messages.push(ChatMessage::assistant(completion.clone()));
        exchanges.push(Exchange {
            prompt: text,
            completion,
        });
    }
    Ok(finish(provider, session, Mode::Serial, exchanges, started))
}

/// Renders the session's prompt and administers it in the given mode.
pub fn administer(
    session: &SessionSpec,
    questionnaire: &Questionnaire,
    mode: Mode,
    provider: &dyn Provider,
) -> Result<SessionTranscript, GatewayError> {
    let prompt = render_prompt(&session.strategy)?;
    match mode {
        Mode::Batch => administer_batch(&prompt, questionnaire, session, provider),
        Mode::Serial => administer_serial(&prompt, questionnaire, session, provider),
    }
}

/// Runs sessions concurrently with at most `parallelism` in flight. Results
/// come back in the order of `sessions`, regardless of completion order.
pub fn administer_all(
    sessions: &[SessionSpec],
    questionnaire: &Questionnaire,
    mode: Mode,
    provider: &dyn Provider,
    parallelism: usize,
) -> Vec<Result<SessionTranscript, GatewayError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        sessions
            .par_iter()
            .map(|s| administer(s, questionnaire, mode, provider))
            .collect()
    })
}

/// Parameters of the cosine circumplex respondent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPersonaParams {
    /// Persona angle on the value circle, radians.
    pub theta: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Rounds half away from zero, then clamps to the response scale.
fn to_scale(x: f64) -> u8 {
    x.round().clamp(f64::from(SCALE_MIN), f64::from(SCALE_MAX)) as u8
}

/// `clamp(round(c + A·cos(angle(value) − θ) + ε), 1, 6)`, with ε drawn from
/// a stream keyed by (seed, item index).
pub fn synthetic_respond(item: &QuestionnaireItem, params: &SyntheticPersonaParams) -> u8 {
    let mut x = params.baseline + params.amplitude * (item.value.angle() - params.theta).cos();
    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, item.index as u64));
        x += Normal::new(0.0, params.noise_sigma)
            .expect("finite sigma")
            .sample(&mut rng);
    }
    to_scale(x)
}

pub const SYNTHETIC_PERSONA: &str =
    "A synthetic respondent whose answers follow a circular value profile.";

/// Answers from the cosine circumplex model. Value-anchor sessions put the
/// persona angle on the anchored value; other sessions draw it uniformly
/// from the session seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticProvider {
    pub amplitude: f64,
    pub baseline: f64,
    pub noise_sigma: f64,
}

impl Default for SyntheticProvider {
    fn default() -> Self {
        Self {
            amplitude: 1.5,
            baseline: 3.5,
            noise_sigma: 0.5,
        }
    }
}

impl SyntheticProvider {
    pub fn params_for(&self, session: &SessionSpec) -> SyntheticPersonaParams {
        let theta = match session.strategy.anchor_value() {
            Some(value) => value.angle(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(session.seed, u64::MAX));
                rng.gen_range(0.0..std::f64::consts::TAU)
            }
        };
        SyntheticPersonaParams {
            theta,
            amplitude: self.amplitude,
            baseline: self.baseline,
            noise_sigma: self.noise_sigma,
            seed: session.seed,
        }
    }
}

impl Provider for SyntheticProvider {
    fn model_name(&self) -> &str {
        "synthetic-circumplex"
    }

    fn records_time(&self) -> bool {
        false
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        match &request.purpose {
            RequestPurpose::Persona { .. } => Ok(SYNTHETIC_PERSONA.to_string()),
            RequestPurpose::Questionnaire {
                session,
                mode,
                items,
                ..
            } => {
                let params = self.params_for(session);
                Ok(match mode {
                    Mode::Serial => synthetic_respond(&items[0], &params).to_string(),
                    Mode::Batch => items
                        .iter()
                        .map(|item| format!("{}. {}", item.index, synthetic_respond(item, &params)))
                        .collect::<Vec<_>>()
                        .join("\n"),
                })
            }
        }
    }
}

/// Returns recorded transcripts (by session id) and recorded personas (in order).
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    model: String,
    transcripts: HashMap<u32, SessionTranscript>,
    personas: Vec<String>,
}

impl ReplayProvider {
    pub fn new(transcripts: Vec<SessionTranscript>) -> Self {
        let model = transcripts
            .first()
            .map_or_else(|| "replay".to_string(), |t| t.model.clone());
        Self {
            model,
            transcripts: transcripts.into_iter().map(|t| (t.session_id, t)).collect(),
            personas: Vec::new(),
        }
    }

    /// Loads a store; personas used by generated-persona sessions are
    /// replayed in session order.
    pub fn from_store(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let mut transcripts = load_transcripts(path)?;
        transcripts.sort_by_key(|t| t.session_id);
        let personas = transcripts
            .iter()
            .filter_map(|t| match &t.strategy {
                PromptStrategy::GeneratedPersona { persona } => Some(persona.clone()),
                _ => None,
            })
            .collect();
        Ok(Self::new(transcripts).with_personas(personas))
    }

    pub fn with_personas(mut self, personas: Vec<String>) -> Self {
        self.personas = personas;
        self
    }
}

impl Provider for ReplayProvider {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        match &request.purpose {
            RequestPurpose::Persona { index, .. } => self
                .personas
                .get(*index)
                .cloned()
                .ok_or_else(|| GatewayError::NotRecorded(format!("persona {index}"))),
            RequestPurpose::Questionnaire {
                session,
                mode,
                turn,
                ..
            } => {
                let t = self.transcripts.get(&session.session_id).ok_or_else(|| {
                    GatewayError::NotRecorded(format!("session {}", session.session_id))
                })?;
                if t.mode != *mode {
                    return Err(GatewayError::ModeMismatch {
                        session_id: t.session_id,
                        requested: *mode,
                        found: t.mode,
                    });
                }
                t.raw_exchanges
                    .get(*turn)
                    .map(|e| e.completion.clone())
                    .ok_or_else(|| {
                        GatewayError::NotRecorded(format!(
                            "session {} turn {turn}",
                            session.session_id
                        ))
                    })
            }
        }
    }

    fn records_time(&self) -> bool {
        false
    }

    fn recorded(
        &self,
        session_id: u32,
        mode: Mode,
    ) -> Option<Result<SessionTranscript, GatewayError>> {
        let t = self.transcripts.get(&session_id)?;
        let expected_len = match mode {
            Mode::Batch => 1,
            Mode::Serial => crate::model::ITEM_COUNT,
        };
        if t.mode != mode || t.raw_exchanges.len() != expected_len {
            return Some(Err(GatewayError::ModeMismatch {
                session_id,
                requested: mode,
                found: if t.raw_exchanges.len() == 1 {
                    Mode::Batch
                } else {
                    t.mode
                },
            }));
        }
        Some(Ok(t.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Live,
    Synthetic,
    Replay,
}

fn default_timeout() -> u64 {
    120
}
fn default_attempts() -> u32 {
    3
}
fn default_backoff() -> u64 {
    1000
}
fn default_credential() -> String {
    DEFAULT_CREDENTIAL_ENV.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model_name: String,
    #[serde(default = "default_credential")]
    pub credential_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Total attempts per request, including the first.
    #[serde(default = "default_attempts", alias = "max_retries")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff")]
    pub backoff_initial_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Synthetic,
            endpoint_url: String::new(),
            model_name: String::new(),
            credential_env_var: default_credential(),
            timeout_secs: default_timeout(),
            max_attempts: default_attempts(),
            backoff_initial_ms: default_backoff(),
        }
    }
}

/// Temperatures other than 0.0 and 0.7 are allowed but logged.
pub fn check_temperature(temperature: f64) -> Result<(), GatewayError> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(GatewayError::Config(format!(
            "temperature {temperature} must be a non-negative number"
        )));
    }
    if temperature != 0.0 && temperature != 0.7 {
        tracing::warn!(temperature, "unusual temperature");
    }
    Ok(())
}

/// Chat-completion client with exponential backoff on transient failures.
pub struct LiveProvider {
    config: ProviderConfig,
    credential: Option<String>,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for LiveProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveProvider")
            .field("endpoint", &self.config.endpoint_url)
            .field("model", &self.config.model_name)
            .finish_non_exhaustive()
    }
}

#[derive(Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct ChatResponseBody {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Retry(GatewayError),
    Fail(GatewayError),
}

impl LiveProvider {
    /// Reads the credential from the configured environment variable; a
    /// missing variable is a configuration error.
    pub fn from_env(config: ProviderConfig) -> Result<Self, GatewayError> {
        let credential = std::env::var(&config.credential_env_var).map_err(|_| {
            GatewayError::Config(format!(
                "environment variable {} is not set",
                config.credential_env_var
            ))
        })?;
        Self::new(config, Some(credential))
    }

    pub fn new(config: ProviderConfig, credential: Option<String>) -> Result<Self, GatewayError> {
        if config.endpoint_url.trim().is_empty() {
            return Err(GatewayError::Config("endpoint_url is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            config,
            credential,
            client,
        })
    }

    fn attempt(&self, body: &ChatRequestBody<'_>) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.config.endpoint_url).json(body);
        if let Some(key) = &self.credential {
            req = req.bearer_auth(key);
        }
        let response = req.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(GatewayError::Timeout(Duration::from_secs(
                    self.config.timeout_secs,
                )))
            } else {
                Attempt::Retry(GatewayError::Transport {
                    status: None,
                    detail: e.to_string(),
                })
            }
        })?;
        let status = response.status();
        let text = response.text().unwrap_or_default();
        if status.is_success() {
            let parsed: ChatResponseBody = serde_json::from_str(&text).map_err(|e| {
                Attempt::Fail(GatewayError::Transport {
                    status: Some(status.as_u16()),
                    detail: format!("malformed response body: {e}"),
                })
            })?;
            return parsed
                .choices
                .into_iter()
                .next()
                .and_then(|c| c.message.content)
                .ok_or(Attempt::Fail(GatewayError::EmptyCompletion));
        }
        let code = status.as_u16();
        let lower = text.to_ascii_lowercase();
        if code == 400 && (lower.contains("context_length") || lower.contains("maximum context"))
        {
            return Err(Attempt::Fail(GatewayError::ContextOverflow(text)));
        }
        let err = GatewayError::Transport {
            status: Some(code),
            detail: text,
        };
        if matches!(code, 408 | 429 | 500 | 502 | 503 | 504) {
            Err(Attempt::Retry(err))
        } else {
            Err(Attempt::Fail(err))
        }
    }
}

impl Provider for LiveProvider {
    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        let body = ChatRequestBody {
            model: &self.config.model_name,
            temperature: request.temperature,
            messages: request.messages,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut delay = Duration::from_millis(self.config.backoff_initial_ms);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    tracing::debug!(attempt, error = %scrub_error(e.clone(), &self.secrets()), "retrying");
                    last = Some(e);
                    if attempt < attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(match last.expect("at least one attempt") {
            e @ (GatewayError::Transport { status: None, .. } | GatewayError::Timeout(_)) => e,
            e => GatewayError::RetryExhausted {
                attempts,
                detail: e.to_string(),
            },
        })
    }

    fn secrets(&self) -> Vec<String> {
        self.credential.iter().cloned().collect()
    }
}

/// Builds the provider a config describes. Replay needs a store path.
pub fn build_provider(
    config: &ProviderConfig,
    replay_store: Option<&Path>,
    synthetic: SyntheticProvider,
) -> Result<Box<dyn Provider>, GatewayError> {
    match config.kind {
        ProviderKind::Live => Ok(Box::new(LiveProvider::from_env(config.clone())?)),
        ProviderKind::Synthetic => Ok(Box::new(synthetic)),
        ProviderKind::Replay => {
            let path = replay_store
                .ok_or_else(|| GatewayError::Config("replay provider needs a store path".into()))?;
            Ok(Box::new(ReplayProvider::from_store(path)?))
        }
    }
}

/// Appends one transcript as a JSON line.
pub fn record_transcript(path: impl AsRef<Path>, transcript: &SessionTranscript) -> Result<(), GatewayError> {
    record_transcripts(path, std::slice::from_ref(transcript))
}

pub fn record_transcripts(
    path: impl AsRef<Path>,
    transcripts: &[SessionTranscript],
) -> Result<(), GatewayError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    for t in transcripts {
        buf.push_str(&serde_json::to_string(t).map_err(|e| GatewayError::Io(e.to_string()))?);
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())?;
    file.flush()?;
    Ok(())
}

/// Loads every transcript in file order. Blank lines are skipped.
pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<SessionTranscript>, GatewayError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|e| GatewayError::CorruptRecord {
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(t);
    }
    Ok(out)
}
