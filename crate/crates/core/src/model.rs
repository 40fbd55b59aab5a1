//! Value taxonomy, circular ordering, questionnaire schema and the human
//! benchmark profile.
//!
//! Everything here is immutable once constructed and can be shared freely
//! across threads.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of values in the refined value theory.
pub const VALUE_COUNT: usize = 19;
/// Items per value.
pub const VARIANTS_PER_VALUE: usize = 3;
/// Items in the questionnaire.
pub const ITEM_COUNT: usize = VALUE_COUNT * VARIANTS_PER_VALUE;
/// Lowest answer on the response scale.
pub const SCALE_MIN: u8 = 1;
/// Highest answer on the response scale.
pub const SCALE_MAX: u8 = 6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read questionnaire {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("questionnaire schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown value code {0:?}")]
    UnknownValue(String),
}

/// One of the 19 values. Declaration order is the circular order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueId {
    SelfDirectionThought,
    SelfDirectionAction,
    Stimulation,
    Hedonism,
    Achievement,
    PowerDominance,
    PowerResources,
    Face,
    SecurityPersonal,
    SecuritySocietal,
    Tradition,
    ConformityRules,
    ConformityInterpersonal,
    Humility,
    BenevolenceDependability,
    BenevolenceCaring,
    UniversalismConcern,
    UniversalismNature,
    UniversalismTolerance,
}

impl ValueId {
    /// All values in circular order, position 0 first.
    pub const ALL: [ValueId; VALUE_COUNT] = [
        ValueId::SelfDirectionThought,
        ValueId::SelfDirectionAction,
        ValueId::Stimulation,
        ValueId::Hedonism,
        ValueId::Achievement,
        ValueId::PowerDominance,
        ValueId::PowerResources,
        ValueId::Face,
        ValueId::SecurityPersonal,
        ValueId::SecuritySocietal,
        ValueId::Tradition,
        ValueId::ConformityRules,
        ValueId::ConformityInterpersonal,
        ValueId::Humility,
        ValueId::BenevolenceDependability,
        ValueId::BenevolenceCaring,
        ValueId::UniversalismConcern,
        ValueId::UniversalismNature,
        ValueId::UniversalismTolerance,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ValueId::SelfDirectionThought => "SDT",
            ValueId::SelfDirectionAction => "SDA",
            ValueId::Stimulation => "ST",
            ValueId::Hedonism => "HE",
            ValueId::Achievement => "AC",
            ValueId::PowerDominance => "POD",
            ValueId::PowerResources => "POR",
            ValueId::Face => "FAC",
            ValueId::SecurityPersonal => "SEP",
            ValueId::SecuritySocietal => "SES",
            ValueId::Tradition => "TR",
            ValueId::ConformityRules => "COR",
            ValueId::ConformityInterpersonal => "COI",
            ValueId::Humility => "HUM",
            ValueId::BenevolenceDependability => "BED",
            ValueId::BenevolenceCaring => "BEC",
            ValueId::UniversalismConcern => "UNC",
            ValueId::UniversalismNature => "UNN",
            ValueId::UniversalismTolerance => "UNT",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ValueId::SelfDirectionThought => "Self-Direction Thought",
            ValueId::SelfDirectionAction => "Self-Direction Action",
            ValueId::Stimulation => "Stimulation",
            ValueId::Hedonism => "Hedonism",
            ValueId::Achievement => "Achievement",
            ValueId::PowerDominance => "Power-Dominance",
            ValueId::PowerResources => "Power-Resources",
            ValueId::Face => "Face",
            ValueId::SecurityPersonal => "Security-Personal",
            ValueId::SecuritySocietal => "Security-Societal",
            ValueId::Tradition => "Tradition",
            ValueId::ConformityRules => "Conformity-Rules",
            ValueId::ConformityInterpersonal => "Conformity-Interpersonal",
            ValueId::Humility => "Humility",
            ValueId::BenevolenceDependability => "Benevolence-Dependability",
            ValueId::BenevolenceCaring => "Benevolence-Caring",
            ValueId::UniversalismConcern => "Universalism-Concern",
            ValueId::UniversalismNature => "Universalism-Nature",
            ValueId::UniversalismTolerance => "Universalism-Tolerance",
        }
    }

    /// Position on the value circle, 0..19.
    pub fn position(self) -> usize {
        self as usize
    }

    pub fn from_position(position: usize) -> ValueId {
        ValueId::ALL[position % VALUE_COUNT]
    }

    /// Angle on the value circle in radians.
    pub fn angle(self) -> f64 {
        2.0 * PI * self.position() as f64 / VALUE_COUNT as f64
    }
}

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ValueId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        ValueId::ALL
            .iter()
            .copied()
            .find(|v| v.code().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| ModelError::UnknownValue(s.to_string()))
    }
}

impl Serialize for ValueId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for ValueId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The fixed circular arrangement of the 19 values.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValueCircle;

impl ValueCircle {
    pub fn ordering(&self) -> &'static [ValueId; VALUE_COUNT] {
        &ValueId::ALL
    }

    pub fn angle(&self, value: ValueId) -> f64 {
        value.angle()
    }

    /// The two values adjacent to `value` on the circle.
    pub fn neighbors(&self, value: ValueId) -> [ValueId; 2] {
        let p = value.position();
        [
            ValueId::from_position(p + VALUE_COUNT - 1),
            ValueId::from_position(p + 1),
        ]
    }
}

/// Number of steps between two values along the shorter arc, 0..=9.
pub fn circle_distance(a: ValueId, b: ValueId) -> usize {
    let diff = a.position().abs_diff(b.position());
    diff.min(VALUE_COUNT - diff)
}

/// Signed circular offset of `value` relative to `anchor`, in 0..19.
pub fn circular_offset(anchor: ValueId, value: ValueId) -> usize {
    (value.position() + VALUE_COUNT - anchor.position()) % VALUE_COUNT
}

/// Which gendered phrasing of the questionnaire a session uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireItem {
    pub index: usize,
    pub value: ValueId,
    pub variant: usize,
    pub text_male: String,
    pub text_female: String,
}

impl QuestionnaireItem {
    pub fn text(&self, gender: Gender) -> &str {
        match gender {
            Gender::Male => &self.text_male,
            Gender::Female => &self.text_female,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub min: u8,
    pub max: u8,
}

/// A validated 57-item questionnaire. Items are stored sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Questionnaire {
    items: Vec<QuestionnaireItem>,
    scale: Scale,
    instructions: String,
}

/// Default respondent instructions for the portrait format.
pub const DEFAULT_INSTRUCTIONS: &str = "Below are short descriptions of different people. \
For each one, consider how similar that person is to you.";

#[derive(Deserialize)]
struct QuestionnaireFile {
    scale: Scale,
    items: Vec<QuestionnaireItem>,
    #[serde(default)]
    instructions: Option<String>,
}

impl Questionnaire {
    pub fn new(
        mut items: Vec<QuestionnaireItem>,
        scale: Scale,
        instructions: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if scale.min != SCALE_MIN || scale.max != SCALE_MAX {
            return Err(ModelError::SchemaViolation(format!(
                "scale {}..{} ≠ {SCALE_MIN}..{SCALE_MAX}",
                scale.min, scale.max
            )));
        }
        if items.len() != ITEM_COUNT {
            return Err(ModelError::SchemaViolation(format!(
                "item count {} ≠ {ITEM_COUNT}",
                items.len()
            )));
        }
        items.sort_by_key(|item| item.index);
        for (expected, item) in (1..=ITEM_COUNT).zip(&items) {
            if item.index != expected {
                let problem = if items.iter().filter(|i| i.index == item.index).count() > 1 {
                    format!("duplicate index {}", item.index)
                } else {
                    format!("index {} outside 1..{ITEM_COUNT}", item.index)
                };
                return Err(ModelError::SchemaViolation(problem));
            }
        }
        for item in &items {
            if item.text_male.trim().is_empty() || item.text_female.trim().is_empty() {
                return Err(ModelError::SchemaViolation(format!(
                    "item {} missing gender variant",
                    item.index
                )));
            }
            if !(1..=VARIANTS_PER_VALUE).contains(&item.variant) {
                return Err(ModelError::SchemaViolation(format!(
                    "item {} variant {} outside 1..{VARIANTS_PER_VALUE}",
                    item.index, item.variant
                )));
            }
        }

        let mut tally: BTreeMap<ValueId, Vec<usize>> = BTreeMap::new();
        for item in &items {
            tally.entry(item.value).or_default().push(item.variant);
        }
        let wrong: Vec<String> = ValueId::ALL
            .iter()
            .filter_map(|v| {
                let n = tally.get(v).map_or(0, Vec::len);
                (n != VARIANTS_PER_VALUE).then(|| format!("{v} has {n} items"))
            })
            .collect();
        if !wrong.is_empty() {
            return Err(ModelError::SchemaViolation(wrong.join(", ")));
        }
        for (value, variants) in &tally {
            let mut sorted = variants.clone();
            sorted.sort_unstable();
            if sorted != [1, 2, 3] {
                return Err(ModelError::SchemaViolation(format!(
                    "{value} variants {sorted:?} ≠ [1, 2, 3]"
                )));
            }
        }

        Ok(Self {
            items,
            scale,
            instructions: instructions.into(),
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self, ModelError> {
        let file: QuestionnaireFile = serde_json::from_str(json)
            .map_err(|e| ModelError::SchemaViolation(e.to_string()))?;
        Self::new(
            file.items,
            file.scale,
            file.instructions
                .unwrap_or_else(|| DEFAULT_INSTRUCTIONS.to_string()),
        )
    }

    pub fn items(&self) -> &[QuestionnaireItem] {
        &self.items
    }

    /// Item by 1-based index.
    pub fn item(&self, index: usize) -> Option<&QuestionnaireItem> {
        index.checked_sub(1).and_then(|i| self.items.get(i))
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn instructions(&self) -> &str {
        &self.instructions
    }

    /// The 1-based item indices belonging to `value`, ordered by variant.
    pub fn items_for(&self, value: ValueId) -> [usize; VARIANTS_PER_VALUE] {
        let mut out = [0; VARIANTS_PER_VALUE];
        for item in self.items.iter().filter(|i| i.value == value) {
            out[item.variant - 1] = item.index;
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "scale": self.scale,
            "instructions": self.instructions,
            "items": self.items,
        }))
        .expect("questionnaire serializes")
    }

    /// The bundled synthetic questionnaire.
    ///
    /// Item `n` measures the value at circle position `(n - 1) % 19` with
    /// variant `(n - 1) / 19 + 1`. The text is placeholder portrait wording,
    /// not the licensed instrument.
    pub fn synthetic() -> Self {
        Self::from_json_str(SYNTHETIC_QUESTIONNAIRE).expect("bundled questionnaire is valid")
    }
}

/// Reads and validates a questionnaire JSON file.
pub fn load_questionnaire(path: impl AsRef<Path>) -> Result<Questionnaire, ModelError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|source| ModelError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Questionnaire::from_json_str(&json)
}

pub const SYNTHETIC_QUESTIONNAIRE: &str = include_str!("../data/questionnaire.synthetic.json");

/// Published cross-cultural mean importance of one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub value: ValueId,
    pub mean_centered_score: f64,
    pub rank: usize,
}

/// Human benchmark means (centered units) and ranks for all 19 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanBenchmark {
    entries: Vec<BenchmarkEntry>,
}

// (value, mean, rank) for the pooled human reference sample.
const HUMAN_BENCHMARK: [(ValueId, f64, usize); VALUE_COUNT] = [
    (ValueId::BenevolenceCaring, 0.79, 1),
    (ValueId::BenevolenceDependability, 0.72, 2),
    (ValueId::SelfDirectionAction, 0.60, 3),
    (ValueId::SelfDirectionThought, 0.58, 4),
    (ValueId::UniversalismConcern, 0.50, 5),
    (ValueId::UniversalismTolerance, 0.37, 6),
    (ValueId::SecuritySocietal, 0.32, 7),
    (ValueId::SecurityPersonal, 0.28, 8),
    (ValueId::Hedonism, 0.23, 9),
    (ValueId::Achievement, 0.08, 10),
    (ValueId::Face, 0.05, 11),
    (ValueId::UniversalismNature, -0.10, 12),
    (ValueId::Stimulation, -0.11, 13),
    (ValueId::ConformityInterpersonal, -0.16, 14),
    (ValueId::Humility, -0.20, 15),
    (ValueId::ConformityRules, -0.26, 16),
    (ValueId::Tradition, -0.72, 17),
    (ValueId::PowerResources, -1.33, 18),
    (ValueId::PowerDominance, -1.40, 19),
];

impl HumanBenchmark {
    /// Entries in human rank order (rank 1 first).
    pub fn entries(&self) -> &[BenchmarkEntry] {
        &self.entries
    }

    pub fn get(&self, value: ValueId) -> &BenchmarkEntry {
        self.entries
            .iter()
            .find(|e| e.value == value)
            .expect("benchmark covers every value")
    }

    /// Means indexed by circle position.
    pub fn means(&self) -> [f64; VALUE_COUNT] {
        let mut out = [0.0; VALUE_COUNT];
        for e in &self.entries {
            out[e.value.position()] = e.mean_centered_score;
        }
        out
    }

    /// Ranks indexed by circle position.
    pub fn ranks(&self) -> [usize; VALUE_COUNT] {
        let mut out = [0; VALUE_COUNT];
        for e in &self.entries {
            out[e.value.position()] = e.rank;
        }
        out
    }

    /// Values ordered from rank 1 to rank 19.
    pub fn rank_order(&self) -> Vec<ValueId> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

pub fn human_benchmark_profile() -> HumanBenchmark {
    HumanBenchmark {
        entries: HUMAN_BENCHMARK
            .iter()
            .map(|&(value, mean_centered_score, rank)| BenchmarkEntry {
                value,
                mean_centered_score,
                rank,
            })
            .collect(),
    }
}
