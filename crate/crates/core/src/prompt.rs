//! The five prompting strategies and run-set planning.
//!
//! Rendering is pure. Planning draws all randomness from a single seeded
//! ChaCha stream, so a plan is reproducible across runs and platforms.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{CompletionRequest, GatewayError, Provider, RequestPurpose};
use crate::model::{Gender, ValueId};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt slot `{0}` is empty")]
    UnfilledPlaceholder(&'static str),
    #[error("list `{0}` is empty")]
    EmptyList(&'static str),
    #[error("cannot read list file {path}: {detail}")]
    ListUnreadable { path: String, detail: String },
    #[error("ethnicity `{ethnicity}` has {available} title/surname combinations, {needed} needed")]
    InsufficientNames {
        ethnicity: String,
        available: usize,
        needed: usize,
    },
    #[error("{available} generated personas available, {needed} needed")]
    InsufficientPersonas { available: usize, needed: usize },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

const BASIC_PROMPT: &str = "For each of the following descriptions, please answer how much the \
person described is like you from 1 (Not like me at all) to 6 (Very much like me), without \
elaborating on your reasoning.";

const RATE_PREFIX: &str = "For each of the following descriptions, please rate how much the \
person described is like you, using a scale from 1 (Not like me at all) to 6 (Very much like me), \
without elaborating on your reasoning.";

/// Request sent to a model to obtain one generated persona.
pub const PERSONA_REQUEST: &str = "Create a persona (2-3 sentences long):";

/// Persona generation always samples at this temperature.
pub const PERSONA_TEMPERATURE: f64 = 0.7;

/// An anchor phrase from the best-worst refined values list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorItem {
    /// `None` for the animal-welfare item, which has no questionnaire value.
    pub value: Option<ValueId>,
    pub label: String,
    pub phrase: String,
}

const ANCHORS: [(ValueId, &str); 19] = [
    (ValueId::SelfDirectionThought, "developing your own original ideas and opinions"),
    (ValueId::SelfDirectionAction, "being free to act independently"),
    (ValueId::Stimulation, "having an exciting life; having all sorts of new experiences"),
    (ValueId::Hedonism, "taking advantage of every opportunity to enjoy life’s pleasures"),
    (ValueId::Achievement, "being ambitious and successful"),
    (ValueId::PowerDominance, "having the power that money and possessions can bring"),
    (ValueId::PowerResources, "having the authority to get others to do what you want"),
    (ValueId::Face, "protecting your public image and avoiding being shamed"),
    (
        ValueId::SecurityPersonal,
        "living and acting in ways that ensure that you are personally safe and secure",
    ),
    (ValueId::SecuritySocietal, "living in a safe and stable society"),
    (ValueId::Tradition, "following cultural family or religious practices"),
    (ValueId::ConformityRules, "obeying all rules and laws"),
    (ValueId::ConformityInterpersonal, "making sure you never upset or annoy others"),
    (ValueId::Humility, "being humble and avoiding public recognition"),
    (
        ValueId::BenevolenceDependability,
        "being a completely dependable and trustworthy friend and family member",
    ),
    (ValueId::BenevolenceCaring, "helping and caring for the wellbeing of those who are close"),
    (
        ValueId::UniversalismConcern,
        "caring and seeking justice for everyone especially the weak and vulnerable in society",
    ),
    (ValueId::UniversalismNature, "protecting the natural environment from destruction or pollution"),
    (
        ValueId::UniversalismTolerance,
        "being open-minded and accepting of people and ideas, even when you disagree with them",
    ),
];

const ANIMAL_WELFARE: &str = "caring for the welfare of animals";

/// The anchor list in circle order; the animal-welfare item is appended on request.
pub fn bwvr_anchors(include_animal_welfare: bool) -> Vec<AnchorItem> {
    let mut anchors: Vec<AnchorItem> = ANCHORS
        .iter()
        .map(|&(value, phrase)| AnchorItem {
            value: Some(value),
            label: value.code().to_string(),
            phrase: phrase.to_string(),
        })
        .collect();
    if include_animal_welfare {
        anchors.push(AnchorItem {
            value: None,
            label: "AW".to_string(),
            phrase: ANIMAL_WELFARE.to_string(),
        });
    }
    anchors
}

pub fn anchor_for(value: ValueId) -> AnchorItem {
    bwvr_anchors(false)
        .into_iter()
        .find(|a| a.value == Some(value))
        .expect("every value has an anchor")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemographicGender {
    Male,
    Female,
    NonBinary,
    Other,
}

impl DemographicGender {
    pub const ALL: [DemographicGender; 4] = [
        DemographicGender::Male,
        DemographicGender::Female,
        DemographicGender::NonBinary,
        DemographicGender::Other,
    ];
}

impl fmt::Display for DemographicGender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemographicGender::Male => "male",
            DemographicGender::Female => "female",
            DemographicGender::NonBinary => "non-binary",
            DemographicGender::Other => "other",
        })
    }
}

pub const MIN_AGE: u32 = 18;
pub const MAX_AGE: u32 = 75;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicProfile {
    pub age: u32,
    pub gender: DemographicGender,
    pub occupation: String,
    pub hobby: String,
}

/// One fully instantiated prompting strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PromptStrategy {
    Basic,
    ValueAnchor { anchor: AnchorItem },
    Demographic { profile: DemographicProfile },
    GeneratedPersona { persona: String },
    Names {
        title: String,
        surname: String,
        ethnicity_tag: String,
    },
}

impl PromptStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            PromptStrategy::Basic => StrategyKind::Basic,
            PromptStrategy::ValueAnchor { .. } => StrategyKind::ValueAnchor,
            PromptStrategy::Demographic { .. } => StrategyKind::Demographic,
            PromptStrategy::GeneratedPersona { .. } => StrategyKind::GeneratedPersona,
            PromptStrategy::Names { .. } => StrategyKind::Names,
        }
    }

    /// The anchored value, for value-anchor sessions.
    pub fn anchor_value(&self) -> Option<ValueId> {
        match self {
            PromptStrategy::ValueAnchor { anchor } => anchor.value,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Basic,
    ValueAnchor,
    Demographic,
    GeneratedPersona,
    Names,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Basic,
        StrategyKind::ValueAnchor,
        StrategyKind::Demographic,
        StrategyKind::GeneratedPersona,
        StrategyKind::Names,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            StrategyKind::Basic => "basic",
            StrategyKind::ValueAnchor => "value-anchor",
            StrategyKind::Demographic => "demographic",
            StrategyKind::GeneratedPersona => "generated-persona",
            StrategyKind::Names => "names",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            StrategyKind::Basic => "Basic",
            StrategyKind::ValueAnchor => "Value Anchor",
            StrategyKind::Demographic => "Demographic",
            StrategyKind::GeneratedPersona => "Persona",
            StrategyKind::Names => "Names",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

fn require(slot: &'static str, value: &str) -> Result<(), PromptError> {
    if value.trim().is_empty() {
        Err(PromptError::UnfilledPlaceholder(slot))
    } else {
        Ok(())
    }
}

/// Renders the instruction text for a strategy.
pub fn render_prompt(strategy: &PromptStrategy) -> Result<String, PromptError> {
    match strategy {
        PromptStrategy::Basic => Ok(BASIC_PROMPT.to_string()),
        PromptStrategy::ValueAnchor { anchor } => {
            require("value", &anchor.phrase)?;
            Ok(format!("{BASIC_PROMPT} Answer as a person that is {}", anchor.phrase))
        }
        PromptStrategy::Demographic { profile } => {
            require("occupation", &profile.occupation)?;
            require("hobby", &profile.hobby)?;
            Ok(format!(
                "{RATE_PREFIX} Answer as a {}-year-old who identifies as {}, working in the field \
                 of {}, and enjoys {}.",
                profile.age, profile.gender, profile.occupation, profile.hobby
            ))
        }
        PromptStrategy::GeneratedPersona { persona } => {
            require("persona", persona)?;
            Ok(format!("{RATE_PREFIX} Answer as: {persona}."))
        }
        PromptStrategy::Names { title, surname, .. } => {
            require("title", title)?;
            require("surname", surname)?;
            Ok(format!("{RATE_PREFIX} Answer as {title} {surname}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameEntry {
    pub title: String,
    pub surname: String,
    pub ethnicity: String,
}

/// Editable lists that feed the demographic and names strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListPools {
    pub occupations: Vec<String>,
    pub hobbies: Vec<String>,
    pub names: Vec<NameEntry>,
}

const DEFAULT_OCCUPATIONS: &str = include_str!("../data/occupations.txt");
const DEFAULT_HOBBIES: &str = include_str!("../data/hobbies.txt");
const DEFAULT_NAMES: &str = include_str!("../data/names.csv");

fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_names(text: &str) -> Result<Vec<NameEntry>, csv::Error> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

impl Default for ListPools {
    fn default() -> Self {
        Self {
            occupations: parse_lines(DEFAULT_OCCUPATIONS),
            hobbies: parse_lines(DEFAULT_HOBBIES),
            names: parse_names(DEFAULT_NAMES).expect("bundled names.csv parses"),
        }
    }
}

fn read(path: &Path) -> Result<String, PromptError> {
    std::fs::read_to_string(path).map_err(|e| PromptError::ListUnreadable {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

impl ListPools {
    /// Loads any of the three list files, keeping bundled defaults for the rest.
    pub fn load(
        occupations: Option<&Path>,
        hobbies: Option<&Path>,
        names: Option<&Path>,
    ) -> Result<Self, PromptError> {
        let mut pools = ListPools::default();
        if let Some(p) = occupations {
            pools.occupations = parse_lines(&read(p)?);
        }
        if let Some(p) = hobbies {
            pools.hobbies = parse_lines(&read(p)?);
        }
        if let Some(p) = names {
            pools.names = parse_names(&read(p)?).map_err(|e| PromptError::ListUnreadable {
                path: p.display().to_string(),
                detail: e.to_string(),
            })?;
        }
        Ok(pools)
    }
}

/// Draws one demographic profile; every field is uniform over its range or list.
pub fn sample_demographic_profile<R: Rng + ?Sized>(
    rng: &mut R,
    pools: &ListPools,
) -> Result<DemographicProfile, PromptError> {
    if pools.occupations.is_empty() {
        return Err(PromptError::EmptyList("occupations"));
    }
    if pools.hobbies.is_empty() {
        return Err(PromptError::EmptyList("hobbies"));
    }
    let age = rng.gen_range(MIN_AGE..=MAX_AGE);
    let gender = *DemographicGender::ALL.choose(rng).expect("non-empty");
    let occupation = pools.occupations.choose(rng).expect("non-empty").clone();
    let hobby = pools.hobbies.choose(rng).expect("non-empty").clone();
    Ok(DemographicProfile {
        age,
        gender,
        occupation,
        hobby,
    })
}

/// One planned questionnaire session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub session_id: u32,
    pub strategy: PromptStrategy,
    pub gender_version: Gender,
    pub temperature: f64,
    /// Per-session seed for any provider-side randomness.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunPlan {
    pub sessions: Vec<SessionSpec>,
}

/// Everything a plan may draw strategy instances from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanInputs {
    pub anchors: Vec<AnchorItem>,
    pub lists: ListPools,
    pub personas: Vec<String>,
}

impl Default for PlanInputs {
    fn default() -> Self {
        Self {
            anchors: bwvr_anchors(false),
            lists: ListPools::default(),
            personas: Vec::new(),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-session seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn names_plan(
    n: usize,
    names: &[NameEntry],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PromptStrategy>, PromptError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if names.is_empty() {
        return Err(PromptError::EmptyList("names"));
    }
    // Unique combinations per tag, in first-seen tag order.
    let mut tags: Vec<String> = Vec::new();
    let mut by_tag: BTreeMap<String, Vec<&NameEntry>> = BTreeMap::new();
    for entry in names {
        let combos = by_tag.entry(entry.ethnicity.clone()).or_insert_with(|| {
            tags.push(entry.ethnicity.clone());
            Vec::new()
        });
        if !combos
            .iter()
            .any(|e| e.title == entry.title && e.surname == entry.surname)
        {
            combos.push(entry);
        }
    }
    let per_tag = n / tags.len();
    let extra = n % tags.len();
    let mut chosen = Vec::with_capacity(n);
    for (t, tag) in tags.iter().enumerate() {
        let needed = per_tag + usize::from(t < extra);
        let mut combos = by_tag[tag].clone();
        if combos.len() < needed {
            return Err(PromptError::InsufficientNames {
                ethnicity: tag.clone(),
                available: combos.len(),
                needed,
            });
        }
        combos.shuffle(rng);
        chosen.extend(combos.into_iter().take(needed).map(|e| PromptStrategy::Names {
            title: e.title.clone(),
            surname: e.surname.clone(),
            ethnicity_tag: e.ethnicity.clone(),
        }));
    }
    chosen.shuffle(rng);
    Ok(chosen)
}

/// Plans `n` sessions of one strategy kind.
///
/// Value anchors are assigned round-robin, gender versions alternate
/// male/female, and every random choice comes from `seed`.
pub fn plan_run_set(
    kind: StrategyKind,
    n: usize,
    seed: u64,
    temperature: f64,
    inputs: &PlanInputs,
) -> Result<RunPlan, PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strategies: Vec<PromptStrategy> = match kind {
        StrategyKind::Basic => vec![PromptStrategy::Basic; n],
        StrategyKind::ValueAnchor => {
            if n > 0 && inputs.anchors.is_empty() {
                return Err(PromptError::EmptyList("anchors"));
            }
            (0..n)
                .map(|k| PromptStrategy::ValueAnchor {
                    anchor: inputs.anchors[k % inputs.anchors.len()].clone(),
                })
                .collect()
        }
        StrategyKind::Demographic => (0..n)
            .map(|_| {
                sample_demographic_profile(&mut rng, &inputs.lists)
                    .map(|profile| PromptStrategy::Demographic { profile })
            })
            .collect::<Result<_, _>>()?,
        StrategyKind::GeneratedPersona => {
            if inputs.personas.len() < n {
                return Err(PromptError::InsufficientPersonas {
                    available: inputs.personas.len(),
                    needed: n,
                });
            }
            inputs.personas[..n]
                .iter()
                .map(|p| PromptStrategy::GeneratedPersona { persona: p.clone() })
                .collect()
        }
        StrategyKind::Names => names_plan(n, &inputs.lists.names, &mut rng)?,
    };

    let sessions = strategies
        .into_iter()
        .enumerate()
        .map(|(k, strategy)| SessionSpec {
            session_id: k as u32 + 1,
            strategy,
            gender_version: if k % 2 == 0 { Gender::Male } else { Gender::Female },
            temperature,
            seed: mix_seed(seed, k as u64 + 1),
        })
        .collect();
    Ok(RunPlan { sessions })
}

/// Asks the provider for `n` short personas at the fixed creative temperature.
pub fn generate_personas(
    n: usize,
    provider: &dyn Provider,
    seed: u64,
) -> Result<Vec<String>, PromptError> {
    let messages = vec![crate::gateway::ChatMessage::user(PERSONA_REQUEST)];
    (0..n)
        .map(|index| {
            let request = CompletionRequest {
                messages: &messages,
                temperature: PERSONA_TEMPERATURE,
                purpose: RequestPurpose::Persona {
                    index,
                    seed: mix_seed(seed, index as u64),
                },
            };
            let text = provider.complete(&request)?;
            let text = text.trim();
            if text.is_empty() {
                Err(GatewayError::EmptyCompletion.into())
            } else {
                Ok(text.to_string())
            }
        })
        .collect()
}
