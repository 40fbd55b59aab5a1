//! Turning raw completions into validated score vectors, and transcripts
//! into the value × variant × session response tensor.

use std::io::Write;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Mode, SessionTranscript};
use crate::model::{
    Gender, Questionnaire, ValueId, ITEM_COUNT, SCALE_MAX, SCALE_MIN, VALUE_COUNT,
    VARIANTS_PER_VALUE,
};
use crate::prompt::PromptStrategy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("found {found} scores")]
    CountMismatch { found: usize },
    #[error("item {item}: score {value} outside 1..6")]
    OutOfRange { item: usize, value: i64 },
    #[error("item {item}: answer is not a number")]
    NonNumeric { item: usize },
    #[error("completion contains no digits")]
    RefusalDetected,
    #[error("item {item}: more than one score in {values:?}")]
    Ambiguous { item: usize, values: Vec<i64> },
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::CountMismatch { .. } => "CountMismatch",
            ParseError::OutOfRange { .. } => "OutOfRange",
            ParseError::NonNumeric { .. } => "NonNumeric",
            ParseError::RefusalDetected => "RefusalDetected",
            ParseError::Ambiguous { .. } => "Ambiguous",
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no session parsed cleanly")]
    EmptyDataset,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Exactly 57 answers in item order, each in 1..=6.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct ScoreVector(Vec<u8>);

impl ScoreVector {
    pub fn new(scores: Vec<u8>) -> Result<Self, ParseError> {
        if scores.len() != ITEM_COUNT {
            return Err(ParseError::CountMismatch {
                found: scores.len(),
            });
        }
        if let Some((i, &v)) = scores
            .iter()
            .enumerate()
            .find(|(_, &v)| !(SCALE_MIN..=SCALE_MAX).contains(&v))
        {
            return Err(ParseError::OutOfRange {
                item: i + 1,
                value: v.into(),
            });
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[u8] {
        &self.0
    }

    /// Score for a 1-based item index.
    pub fn item(&self, index: usize) -> u8 {
        self.0[index - 1]
    }
}

impl TryFrom<Vec<u8>> for ScoreVector {
    type Error = ParseError;
    fn try_from(v: Vec<u8>) -> Result<Self, Self::Error> {
        ScoreVector::new(v)
    }
}

impl From<ScoreVector> for Vec<u8> {
    fn from(v: ScoreVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Accept only `n. s` lines.
    pub strict: bool,
}

/// Output layouts the parser accepts, also used to format test fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    NumberedDot,
    NumberedParen,
    NumberedColon,
    SpaceSeparated,
    CommaSeparated,
    OnePerLine,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 6] = [
        OutputFormat::NumberedDot,
        OutputFormat::NumberedParen,
        OutputFormat::NumberedColon,
        OutputFormat::SpaceSeparated,
        OutputFormat::CommaSeparated,
        OutputFormat::OnePerLine,
    ];
}

pub fn format_scores(scores: &[u8], format: OutputFormat) -> String {
    let numbered = |sep: &str| {
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}{sep} {s}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let joined = |sep: &str| {
        scores
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join(sep)
    };
    match format {
        OutputFormat::NumberedDot => numbered("."),
        OutputFormat::NumberedParen => numbered(")"),
        OutputFormat::NumberedColon => numbered(":"),
        OutputFormat::SpaceSeparated => joined(" "),
        OutputFormat::CommaSeparated => joined(", "),
        OutputFormat::OnePerLine => joined("\n"),
    }
}

fn numbered_line(strict: bool) -> &'static Regex {
    static LOOSE: OnceLock<Regex> = OnceLock::new();
    static STRICT: OnceLock<Regex> = OnceLock::new();
    if strict {
        STRICT.get_or_init(|| Regex::new(r"^\s*(\d+)\s*\.\s*(.*)$").unwrap())
    } else {
        LOOSE.get_or_init(|| {
            Regex::new(r"^\s*(?:\*\*)?(\d+)\s*[.):]\s*(?:\*\*)?\s*(.*)$").unwrap()
        })
    }
}

fn integers(text: &str) -> Vec<i64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+").unwrap())
        .find_iter(text)
        .map(|m| m.as_str().parse::<i64>().unwrap_or(i64::MAX))
        .collect()
}

fn check_range(item: usize, value: i64) -> Result<u8, ParseError> {
    if (i64::from(SCALE_MIN)..=i64::from(SCALE_MAX)).contains(&value) {
        Ok(value as u8)
    } else {
        Err(ParseError::OutOfRange { item, value })
    }
}

/// The leading integer of a numbered answer such as `5`, `5 (Like me)`, `**4**`.
fn leading_integer(answer: &str) -> Option<i64> {
    let trimmed = answer.trim_start_matches(|c: char| c.is_whitespace() || c == '*');
    let digits: String = trimmed.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() {
        None
    } else {
        Some(digits.parse().unwrap_or(i64::MAX))
    }
}

fn parse_numbered(
    lines: &[(usize, &str)],
    expected: usize,
) -> Result<Vec<u8>, ParseError> {
    let mut slots: Vec<Option<u8>> = vec![None; expected];
    let mut found = 0;
    for &(index, answer) in lines {
        let value = leading_integer(answer).ok_or(ParseError::NonNumeric { item: index })?;
        let score = check_range(index, value)?;
        found += 1;
        match slots.get_mut(index.wrapping_sub(1)) {
            Some(slot @ None) => *slot = Some(score),
            _ => return Err(ParseError::CountMismatch { found: lines.len() }),
        }
    }
    if found != expected {
        return Err(ParseError::CountMismatch { found });
    }
    Ok(slots.into_iter().map(|s| s.expect("all slots filled")).collect())
}

fn parse_bare(raw: &str, expected: usize) -> Result<Vec<u8>, ParseError> {
    let tokens: Vec<&str> = raw
        .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .collect();
    let mut values = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        let token = token.trim_end_matches('.');
        match token.parse::<i64>() {
            Ok(v) => values.push(v),
            Err(_) => return Err(ParseError::NonNumeric { item: i + 1 }),
        }
    }
    if values.len() != expected {
        return Err(ParseError::CountMismatch {
            found: values.len(),
        });
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| check_range(i + 1, v))
        .collect()
}

/// Extracts `expected` item scores from a batch completion.
///
/// Numbered lines (`n. s`, `n) s`, `n: s`) take precedence; other lines are
/// ignored when any numbered line is present. Otherwise the completion must be
/// a bare run of integers separated by whitespace or commas.
pub fn parse_scores_with(
    raw: &str,
    expected: usize,
    options: ParseOptions,
) -> Result<Vec<u8>, ParseError> {
    if !raw.chars().any(|c| c.is_ascii_digit()) {
        return Err(ParseError::RefusalDetected);
    }
    let pattern = numbered_line(options.strict);
    let numbered: Vec<(usize, &str)> = raw
        .lines()
        .filter_map(|line| {
            let caps = pattern.captures(line)?;
            let index = caps[1].parse().ok()?;
            Some((index, caps.get(2).map_or("", |m| m.as_str())))
        })
        .collect();
    if !numbered.is_empty() {
        return parse_numbered(&numbered, expected);
    }
    if options.strict {
        return Err(ParseError::CountMismatch { found: 0 });
    }
    parse_bare(raw, expected)
}

pub fn parse_scores(raw: &str, options: ParseOptions) -> Result<ScoreVector, ParseError> {
    parse_scores_with(raw, ITEM_COUNT, options).map(ScoreVector)
}

/// Extracts the single score of one serial-mode answer for `item`.
pub fn parse_single_score(raw: &str, item: usize) -> Result<u8, ParseError> {
    let all = integers(raw);
    if all.is_empty() {
        return Err(ParseError::RefusalDetected);
    }
    let in_range: Vec<i64> = all
        .iter()
        .copied()
        .filter(|v| (i64::from(SCALE_MIN)..=i64::from(SCALE_MAX)).contains(v))
        .collect();
    match in_range.first() {
        None => Err(ParseError::OutOfRange {
            item,
            value: all[0],
        }),
        Some(&first) => {
            if in_range.iter().any(|&v| v != first) {
                Err(ParseError::Ambiguous {
                    item,
                    values: in_range,
                })
            } else {
                Ok(first as u8)
            }
        }
    }
}

/// Parses the scores of any transcript, batch or serial.
pub fn parse_transcript(
    transcript: &SessionTranscript,
    options: ParseOptions,
) -> Result<ScoreVector, ParseError> {
    match transcript.mode {
        Mode::Batch => {
            let [exchange] = transcript.raw_exchanges.as_slice() else {
                return Err(ParseError::CountMismatch {
                    found: transcript.raw_exchanges.len(),
                });
            };
            parse_scores(&exchange.completion, options)
        }
        Mode::Serial => {
            if transcript.raw_exchanges.len() != ITEM_COUNT {
                return Err(ParseError::CountMismatch {
                    found: transcript.raw_exchanges.len(),
                });
            }
            transcript
                .raw_exchanges
                .iter()
                .enumerate()
                .map(|(i, ex)| parse_single_score(&ex.completion, i + 1))
                .collect::<Result<Vec<_>, _>>()
                .map(ScoreVector)
        }
    }
}

/// Metadata kept for each session along the k axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: u32,
    pub model: String,
    pub strategy: PromptStrategy,
    pub gender_version: Gender,
    pub mode: Mode,
    pub temperature: f64,
}

impl SessionMeta {
    pub fn from_transcript(t: &SessionTranscript) -> Self {
        Self {
            session_id: t.session_id,
            model: t.model.clone(),
            strategy: t.strategy.clone(),
            gender_version: t.gender_version,
            mode: t.mode,
            temperature: t.temperature,
        }
    }
}

pub type ValueScores = [[u8; VARIANTS_PER_VALUE]; VALUE_COUNT];

/// Scores indexed by value (circle position), variant and session.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    sessions: Vec<ValueScores>,
    meta: Vec<SessionMeta>,
}

impl ResponseMatrix {
    /// Builds from per-session score vectors routed through the questionnaire mapping.
    pub fn from_scores(
        rows: Vec<(SessionMeta, ScoreVector)>,
        questionnaire: &Questionnaire,
    ) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let (meta, sessions) = rows
            .into_iter()
            .map(|(m, scores)| (m, route(&scores, questionnaire)))
            .unzip();
        Ok(Self { sessions, meta })
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.len()
    }

    /// Entry X[value, variant, session]; variant and session are 0-based.
    pub fn x(&self, value: ValueId, variant: usize, session: usize) -> u8 {
        self.sessions[session][value.position()][variant]
    }

    pub fn session(&self, k: usize) -> &ValueScores {
        &self.sessions[k]
    }

    pub fn sessions(&self) -> &[ValueScores] {
        &self.sessions
    }

    pub fn meta(&self) -> &[SessionMeta] {
        &self.meta
    }

    /// Sessions whose metadata satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&SessionMeta) -> bool) -> Option<ResponseMatrix> {
        let (sessions, meta): (Vec<_>, Vec<_>) = self
            .sessions
            .iter()
            .zip(&self.meta)
            .filter(|(_, m)| keep(m))
            .map(|(s, m)| (*s, m.clone()))
            .unzip();
        (!sessions.is_empty()).then_some(ResponseMatrix { sessions, meta })
    }

    /// Session score vector back in item order.
    pub fn item_scores(&self, k: usize, questionnaire: &Questionnaire) -> ScoreVector {
        let mut out = vec![0; ITEM_COUNT];
        for item in questionnaire.items() {
            out[item.index - 1] = self.sessions[k][item.value.position()][item.variant - 1];
        }
        ScoreVector(out)
    }
}

fn route(scores: &ScoreVector, questionnaire: &Questionnaire) -> ValueScores {
    let mut out = [[0; VARIANTS_PER_VALUE]; VALUE_COUNT];
    for item in questionnaire.items() {
        out[item.value.position()][item.variant - 1] = scores.item(item.index);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub session_id: u32,
    pub error_kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledDataset {
    pub matrix: ResponseMatrix,
    pub exclusions: Vec<Exclusion>,
}

/// Parses every transcript; failures go to the exclusion report, the rest
/// are indexed in session-id order.
pub fn assemble_dataset(
    transcripts: &[SessionTranscript],
    questionnaire: &Questionnaire,
    options: ParseOptions,
) -> Result<AssembledDataset, DatasetError> {
    let mut ordered: Vec<&SessionTranscript> = transcripts.iter().collect();
    ordered.sort_by_key(|t| t.session_id);
    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for t in ordered {
        match parse_transcript(t, options) {
            Ok(scores) => rows.push((SessionMeta::from_transcript(t), scores)),
            Err(e) => exclusions.push(Exclusion {
                session_id: t.session_id,
                error_kind: e.kind().to_string(),
                detail: e.to_string(),
            }),
        }
    }
    let matrix = ResponseMatrix::from_scores(rows, questionnaire)?;
    Ok(AssembledDataset { matrix, exclusions })
}

pub fn write_exclusions_csv<W: Write>(out: W, exclusions: &[Exclusion]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["session_id", "error_kind", "detail"])?;
    for e in exclusions {
        w.write_record([e.session_id.to_string(), e.error_kind.clone(), e.detail.clone()])?;
    }
    w.flush()?;
    Ok(())
}

fn strategy_detail(strategy: &PromptStrategy) -> String {
    match strategy {
        PromptStrategy::Basic => String::new(),
        PromptStrategy::ValueAnchor { anchor } => anchor.label.clone(),
        PromptStrategy::Demographic { profile } => format!(
            "{}|{}|{}|{}",
            profile.age, profile.gender, profile.occupation, profile.hobby
        ),
        PromptStrategy::GeneratedPersona { persona } => persona.clone(),
        PromptStrategy::Names {
            title,
            surname,
            ethnicity_tag,
        } => format!("{title} {surname}|{ethnicity_tag}"),
    }
}

/// One row per session: metadata columns, then q1..q57 in item order.
pub fn write_dataset_csv<W: Write>(
    out: W,
    matrix: &ResponseMatrix,
    questionnaire: &Questionnaire,
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "session_id",
        "model",
        "strategy",
        "strategy_detail",
        "gender_version",
        "mode",
        "temperature",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=ITEM_COUNT).map(|i| format!("q{i}")));
    w.write_record(&header)?;
    for (k, m) in matrix.meta().iter().enumerate() {
        let mut row = vec![
            m.session_id.to_string(),
            m.model.clone(),
            m.strategy.kind().slug().to_string(),
            strategy_detail(&m.strategy),
            m.gender_version.to_string(),
            m.mode.to_string(),
            format!("{}", m.temperature),
        ];
        row.extend(
            matrix
                .item_scores(k, questionnaire)
                .scores()
                .iter()
                .map(u8::to_string),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Exchange, Timestamps};
    use proptest::prelude::*;

    fn canonical(scores: &[u8]) -> String {
        format_scores(scores, OutputFormat::NumberedDot)
    }

    fn sample() -> Vec<u8> {
        (0..57).map(|i| (i % 6) as u8 + 1).collect()
    }

    #[test]
    fn canonical_format() {
        let scores = sample();
        let raw = canonical(&scores);
        assert!(raw.starts_with("1. 1\n2. 2\n"));
        assert_eq!(parse_scores(&raw, ParseOptions::default()).unwrap().scores(), &scores[..]);
    }

    #[test]
    fn missing_line_is_count_mismatch() {
        let raw = canonical(&sample()[..56]);
        assert_eq!(
            parse_scores(&raw, ParseOptions::default()),
            Err(ParseError::CountMismatch { found: 56 })
        );
    }

    #[test]
    fn out_of_range_names_item() {
        let mut lines: Vec<String> = canonical(&sample()).lines().map(String::from).collect();
        lines[11] = "12. 7".into();
        assert_eq!(
            parse_scores(&lines.join("\n"), ParseOptions::default()),
            Err(ParseError::OutOfRange { item: 12, value: 7 })
        );
    }

    #[test]
    fn refusal_and_non_numeric() {
        assert_eq!(
            parse_scores("I'm sorry, I can't help with that.", ParseOptions::default()),
            Err(ParseError::RefusalDetected)
        );
        let mut lines: Vec<String> = canonical(&sample()).lines().map(String::from).collect();
        lines[3] = "4. Somewhat like me".into();
        assert_eq!(
            parse_scores(&lines.join("\n"), ParseOptions::default()),
            Err(ParseError::NonNumeric { item: 4 })
        );
    }

    #[test]
    fn strict_mode_rejects_other_formats() {
        let scores = sample();
        let strict = ParseOptions { strict: true };
        assert!(parse_scores(&canonical(&scores), strict).is_ok());
        for format in &OutputFormat::ALL[1..] {
            assert!(parse_scores(&format_scores(&scores, *format), strict).is_err());
        }
    }

    #[test]
    fn serial_single_scores() {
        assert_eq!(parse_single_score("5", 1), Ok(5));
        assert_eq!(parse_single_score("I'd say 4.", 2), Ok(4));
        assert_eq!(parse_single_score("Answer: 3 - 3", 2), Ok(3));
        assert_eq!(parse_single_score("no comment", 3), Err(ParseError::RefusalDetected));
        assert_eq!(
            parse_single_score("9", 4),
            Err(ParseError::OutOfRange { item: 4, value: 9 })
        );
        assert_eq!(
            parse_single_score("2 or 5", 5),
            Err(ParseError::Ambiguous {
                item: 5,
                values: vec![2, 5]
            })
        );
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(
            scores in prop::collection::vec(1u8..=6, 57),
            which in 0usize..6,
        ) {
            let raw = format_scores(&scores, OutputFormat::ALL[which]);
            let parsed = parse_scores(&raw, ParseOptions::default()).unwrap();
            prop_assert_eq!(parsed.scores(), &scores[..]);
        }
    }

    fn transcript(id: u32, completion: &str) -> SessionTranscript {
        SessionTranscript {
            session_id: id,
            model: "m".into(),
            strategy: PromptStrategy::Basic,
            gender_version: Gender::Male,
            mode: Mode::Batch,
            temperature: 0.0,
            raw_exchanges: vec![Exchange {
                prompt: "p".into(),
                completion: completion.into(),
            }],
            timestamps: Timestamps::default(),
            parsed_scores: None,
        }
    }

    #[test]
    fn assemble_excludes_bad_sessions() {
        let q = Questionnaire::synthetic();
        let good = canonical(&sample());
        let ts = vec![
            transcript(3, &good),
            transcript(1, &good),
            transcript(2, "I cannot answer."),
        ];
        let ds = assemble_dataset(&ts, &q, ParseOptions::default()).unwrap();
        assert_eq!(ds.matrix.n_sessions(), 2);
        assert_eq!(ds.matrix.meta()[0].session_id, 1);
        assert_eq!(ds.matrix.meta()[1].session_id, 3);
        assert_eq!(ds.exclusions.len(), 1);
        assert_eq!(ds.exclusions[0].session_id, 2);
        assert_eq!(ds.exclusions[0].error_kind, "RefusalDetected");
        assert_eq!(ts.len(), ds.matrix.n_sessions() + ds.exclusions.len());
    }

    #[test]
    fn assemble_routes_items() {
        let q = Questionnaire::synthetic();
        let scores = sample();
        let ds = assemble_dataset(&[transcript(1, &canonical(&scores))], &q, ParseOptions::default())
            .unwrap();
        for item in q.items() {
            assert_eq!(
                ds.matrix.x(item.value, item.variant - 1, 0),
                scores[item.index - 1]
            );
        }
        assert_eq!(ds.matrix.item_scores(0, &q).scores(), &scores[..]);
    }

    #[test]
    fn nothing_parses() {
        let q = Questionnaire::synthetic();
        let err = assemble_dataset(&[transcript(1, "no")], &q, ParseOptions::default());
        assert!(matches!(err, Err(DatasetError::EmptyDataset)));
    }

    #[test]
    fn csv_exports() {
        let q = Questionnaire::synthetic();
        let ds = assemble_dataset(
            &[transcript(1, &canonical(&sample())), transcript(2, "")],
            &q,
            ParseOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &ds.matrix, &q).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("session_id,model,strategy"));
        assert!(header.ends_with(",q56,q57"));
        assert_eq!(text.lines().count(), 2);

        let mut buf = Vec::new();
        write_exclusions_csv(&mut buf, &ds.exclusions).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "session_id,error_kind,detail\n2,RefusalDetected,completion contains no digits\n"
        );
    }
}
