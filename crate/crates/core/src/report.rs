//! Per-dataset structure report and comparisons across reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    align_embeddings, anchored_curve, correlation_matrix, cronbach_by_value, fit_sine, mds_embed,
    mean_profile, rank_profile, spearman_rho, AnalysisError, AnchoredCurve, Embedding2D,
    SineFit,
};
use crate::config::AnalysisConfig;
use crate::model::{human_benchmark_profile, ValueId};
use crate::parser::ResponseMatrix;
use crate::prompt::StrategyKind;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing input {0}")]
    MissingInput(String),
    #[error("{path}: malformed report: {detail}")]
    MalformedReport { path: String, detail: String },
    #[error("{path}: malformed reference configuration: {detail}")]
    MalformedReference { path: String, detail: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub model: String,
    /// Strategy slug, or `mixed` when sessions disagree.
    pub strategy: String,
    pub temperature: f64,
    pub mode: String,
    pub n_sessions: usize,
    pub n_excluded: usize,
}

/// Row-major matrix with value codes labelling rows and columns; invalid
/// entries are null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub labels: Vec<ValueId>,
    pub rows: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedEmbedding {
    pub values: Vec<ValueId>,
    pub aligned: Vec<[f64; 2]>,
    pub reference: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub dataset: DatasetInfo,
    /// Value order of `mean_profile`, `ranks` and `cronbach_alpha`.
    pub values: Vec<ValueId>,
    pub mean_profile: Vec<f64>,
    pub ranks: Vec<f64>,
    pub spearman_vs_human: Option<f64>,
    pub cronbach_alpha: Vec<Option<f64>>,
    pub correlation_matrix: Option<LabeledMatrix>,
    pub embedding: Option<Embedding2D>,
    pub stress1: Option<f64>,
    pub procrustes_ssd: Option<f64>,
    pub aligned_embedding: Option<AlignedEmbedding>,
    pub anchored_curve: Option<AnchoredCurve>,
    pub sine_fit: Option<SineFit>,
    /// Sections that could not be computed, with the reason.
    pub errors: BTreeMap<String, String>,
}

impl StructureReport {
    pub fn strategy_kind(&self) -> Option<StrategyKind> {
        self.dataset.strategy.parse().ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(ReportError::MissingInput(path.display().to_string()));
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ReportError::MalformedReport {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

fn dataset_info(name: &str, matrix: &ResponseMatrix, n_excluded: usize) -> DatasetInfo {
    let meta = matrix.meta();
    let first = &meta[0];
    let kind = first.strategy.kind();
    let strategy = if meta.iter().all(|m| m.strategy.kind() == kind) {
        kind.slug().to_string()
    } else {
        "mixed".to_string()
    };
    DatasetInfo {
        name: name.to_string(),
        model: first.model.clone(),
        strategy,
        temperature: first.temperature,
        mode: first.mode.to_string(),
        n_sessions: matrix.n_sessions(),
        n_excluded,
    }
}

/// Runs every analysis on one dataset. Failing sections are recorded in
/// `errors` and left empty; the rest still run.
pub fn analyze_dataset(
    name: &str,
    matrix: &ResponseMatrix,
    n_excluded: usize,
    reference: &Embedding2D,
    options: &AnalysisConfig,
    seed: u64,
) -> StructureReport {
    let mut errors = BTreeMap::new();
    let mut note = |section: &str, e: AnalysisError| {
        errors.insert(section.to_string(), e.to_string());
    };

    let profile = mean_profile(matrix);
    let ranks = rank_profile(&profile);
    let spearman = spearman_rho(&profile, &human_benchmark_profile().means())
        .map_err(|e| note("spearman_vs_human", e))
        .ok();
    let cronbach_alpha = cronbach_by_value(matrix)
        .into_iter()
        .map(|(_, a)| a.ok())
        .collect();

    let corr = correlation_matrix(matrix).map_err(|e| note("correlation_matrix", e)).ok();
    let embedding = corr.as_ref().and_then(|c| {
        mds_embed(c, seed, &options.mds)
            .map_err(|e| note("embedding", e))
            .ok()
    });
    let aligned = embedding.as_ref().and_then(|e| {
        align_embeddings(e, reference, options.prescale)
            .map_err(|e| note("procrustes_ssd", e))
            .ok()
    });
    let curve = if matrix.meta().iter().any(|m| m.strategy.anchor_value().is_some()) {
        anchored_curve(matrix).map_err(|e| note("anchored_curve", e)).ok()
    } else {
        None
    };

    StructureReport {
        dataset: dataset_info(name, matrix, n_excluded),
        values: ValueId::ALL.to_vec(),
        mean_profile: profile.to_vec(),
        ranks: ranks.to_vec(),
        spearman_vs_human: spearman,
        cronbach_alpha,
        correlation_matrix: corr.map(|c| LabeledMatrix {
            labels: ValueId::ALL.to_vec(),
            rows: ValueId::ALL
                .iter()
                .map(|&a| ValueId::ALL.iter().map(|&b| c.get(a, b)).collect())
                .collect(),
        }),
        stress1: embedding.as_ref().map(|e| e.stress1),
        embedding,
        procrustes_ssd: aligned.as_ref().map(|(_, f)| f.ssd),
        aligned_embedding: aligned.map(|(values, fit)| AlignedEmbedding {
            values,
            aligned: fit.aligned,
            reference: fit.target,
        }),
        sine_fit: curve.as_ref().map(|c| fit_sine(&c.y)),
        anchored_curve: curve,
        errors,
    }
}

#[derive(Debug, Deserialize)]
struct ReferenceRow {
    value: String,
    x: f64,
    y: f64,
}

/// Reads a user-supplied 2D configuration with columns `value,x,y`.
pub fn load_reference_embedding(path: impl AsRef<Path>) -> Result<Embedding2D, ReportError> {
    let path = path.as_ref();
    let bad = |detail: String| ReportError::MalformedReference {
        path: path.display().to_string(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut values = Vec::new();
    let mut points = Vec::new();
    for row in reader.deserialize::<ReferenceRow>() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let value: ValueId = row.value.parse().map_err(|e: crate::model::ModelError| bad(e.to_string()))?;
        if values.contains(&value) {
            return Err(bad(format!("{} listed twice", value.code())));
        }
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(bad(format!("non-finite coordinate for {}", value.code())));
        }
        values.push(value);
        points.push([row.x, row.y]);
    }
    if values.len() < 3 {
        return Err(bad(format!("{} values given, at least 3 needed", values.len())));
    }
    Ok(Embedding2D {
        values,
        points,
        stress1: 0.0,
    })
}

/// Outcome of comparing the value-anchor SSD against the names SSD for
/// one (model, temperature, mode) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsdOrderingCheck {
    pub model: String,
    pub temperature: f64,
    pub mode: String,
    pub value_anchor_ssd: f64,
    pub names_ssd: f64,
    pub holds: bool,
}

/// Key shared by reports of the same model, temperature and mode.
pub fn group_key(r: &StructureReport) -> (String, String, String) {
    (
        r.dataset.model.clone(),
        format!("{}", r.dataset.temperature),
        r.dataset.mode.clone(),
    )
}

/// Checks `ssd(Value Anchor) < ssd(Names)` in every group that has both.
pub fn check_ssd_ordering(reports: &[StructureReport]) -> Vec<SsdOrderingCheck> {
    // value anchor ssd, names ssd, temperature
    type Slot = (Option<f64>, Option<f64>, f64);
    let mut groups: BTreeMap<(String, String, String), Slot> = BTreeMap::new();
    for r in reports {
        let entry = groups
            .entry(group_key(r))
            .or_insert((None, None, r.dataset.temperature));
        match r.strategy_kind() {
            Some(StrategyKind::ValueAnchor) => entry.0 = r.procrustes_ssd.or(entry.0),
            Some(StrategyKind::Names) => entry.1 = r.procrustes_ssd.or(entry.1),
            _ => {}
        }
    }
    groups
        .into_iter()
        .filter_map(|((model, _, mode), (va, names, temperature))| {
            let (va, names) = (va?, names?);
            Some(SsdOrderingCheck {
                model,
                temperature,
                mode,
                value_anchor_ssd: va,
                names_ssd: names,
                holds: va < names,
            })
        })
        .collect()
}

/// Ranks as integers when they are whole, for display.
pub fn format_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{human_reference_embedding, MdsOptions};
    use crate::gateway::{administer_all, Mode, SyntheticProvider};
    use crate::model::Questionnaire;
    use crate::parser::{assemble_dataset, ParseOptions};
    use crate::prompt::{plan_run_set, PlanInputs};

    fn dataset(kind: StrategyKind, n: usize) -> ResponseMatrix {
        let q = Questionnaire::synthetic();
        let plan = plan_run_set(kind, n, 3, 0.0, &PlanInputs::default()).unwrap();
        let ts: Vec<_> = administer_all(&plan.sessions, &q, Mode::Batch, &SyntheticProvider::default(), 4)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assemble_dataset(&ts, &q, ParseOptions::default()).unwrap().matrix
    }

    #[test]
    fn report_has_all_sections_for_anchor_data() {
        let reference = human_reference_embedding(1, &MdsOptions::default());
        let r = analyze_dataset("va", &dataset(StrategyKind::ValueAnchor, 60), 0, &reference, &AnalysisConfig::default(), 1);
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert!(r.spearman_vs_human.is_some());
        assert!(r.procrustes_ssd.is_some());
        assert!(r.anchored_curve.is_some() && r.sine_fit.is_some());
        let json = r.to_json();
        let back: StructureReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
        for key in ["mean_profile", "ranks", "spearman_vs_human", "correlation_matrix", "embedding", "stress1", "procrustes_ssd", "anchored_curve", "sine_fit"] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
    }

    #[test]
    fn basic_data_has_no_curve() {
        let reference = human_reference_embedding(1, &MdsOptions::default());
        let r = analyze_dataset("b", &dataset(StrategyKind::Basic, 20), 0, &reference, &AnalysisConfig::default(), 1);
        assert!(r.anchored_curve.is_none());
        assert!(r.errors.is_empty());
        assert_eq!(r.dataset.strategy, "basic");
    }

    #[test]
    fn too_few_sessions_is_recorded_not_fatal() {
        let reference = human_reference_embedding(1, &MdsOptions::default());
        let r = analyze_dataset("b", &dataset(StrategyKind::Basic, 2), 0, &reference, &AnalysisConfig::default(), 1);
        assert!(r.errors.contains_key("correlation_matrix"));
        assert!(r.embedding.is_none());
        assert_eq!(r.mean_profile.len(), 19);
    }

    #[test]
    fn reference_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        std::fs::write(&path, "value,x,y\nSDT,1,0\nHE,0,1\nPOD,-1,0\nBEC,0,-1\n").unwrap();
        let e = load_reference_embedding(&path).unwrap();
        assert_eq!(e.values.len(), 4);
        assert_eq!(e.point(ValueId::Hedonism), Some([0.0, 1.0]));
        std::fs::write(&path, "value,x,y\nSDT,1,0\nXYZ,0,1\n").unwrap();
        assert!(matches!(load_reference_embedding(&path), Err(ReportError::MalformedReference { .. })));
    }

    fn stub(model: &str, strategy: StrategyKind, ssd: f64) -> StructureReport {
        StructureReport {
            dataset: DatasetInfo {
                name: format!("{model}-{strategy}"),
                model: model.into(),
                strategy: strategy.slug().into(),
                temperature: 0.0,
                mode: "batch".into(),
                n_sessions: 1,
                n_excluded: 0,
            },
            values: ValueId::ALL.to_vec(),
            mean_profile: vec![0.0; 19],
            ranks: vec![10.0; 19],
            spearman_vs_human: None,
            cronbach_alpha: vec![None; 19],
            correlation_matrix: None,
            embedding: None,
            stress1: None,
            procrustes_ssd: Some(ssd),
            aligned_embedding: None,
            anchored_curve: None,
            sine_fit: None,
            errors: BTreeMap::new(),
        }
    }

    #[test]
    fn ssd_ordering() {
        let reports = vec![
            stub("a", StrategyKind::ValueAnchor, 0.23),
            stub("a", StrategyKind::Names, 0.32),
            stub("b", StrategyKind::ValueAnchor, 0.5),
            stub("b", StrategyKind::Names, 0.4),
            stub("c", StrategyKind::Basic, 0.1),
        ];
        let checks = check_ssd_ordering(&reports);
        assert_eq!(checks.len(), 2);
        assert!(checks[0].holds);
        assert!(!checks[1].holds);
    }
}
