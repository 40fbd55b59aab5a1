//! Paired comparison of per-seed Procrustes SSD between two strategies.

use value_probe::analysis::{wilcoxon_signed_rank, Alternative};
use value_probe::config::AnalysisConfig;
use value_probe::gateway::{administer_all, Mode, SyntheticProvider};
use value_probe::analysis::{human_reference_embedding, MdsOptions};
use value_probe::model::Questionnaire;
use value_probe::parser::{assemble_dataset, ParseOptions};
use value_probe::prompt::{plan_run_set, PlanInputs, StrategyKind};
use value_probe::report::analyze_dataset;

fn ssd(kind: StrategyKind, seed: u64, q: &Questionnaire) -> f64 {
    let plan = plan_run_set(kind, 60, seed, 0.0, &PlanInputs::default()).unwrap();
    let transcripts: Vec<_> = administer_all(&plan.sessions, q, Mode::Batch, &SyntheticProvider::default(), 4)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    let data = assemble_dataset(&transcripts, q, ParseOptions::default()).unwrap().matrix;
    let reference = human_reference_embedding(0, &MdsOptions::default());
    analyze_dataset("x", &data, 0, &reference, &AnalysisConfig::default(), seed)
        .procrustes_ssd
        .unwrap()
}

fn main() {
    let q = Questionnaire::synthetic();
    let (mut anchored, mut names) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        anchored.push(ssd(StrategyKind::ValueAnchor, seed, &q));
        names.push(ssd(StrategyKind::Names, seed, &q));
    }
    println!("value-anchor {anchored:.4?}");
    println!("names        {names:.4?}");
    for alt in [Alternative::TwoSided, Alternative::Less] {
        let r = wilcoxon_signed_rank(&anchored, &names, alt).unwrap();
        println!(
            "{alt:?}: n {}, W+ {}, W- {}, p {:.5} ({})",
            r.n,
            r.w_plus,
            r.w_minus,
            r.p_value,
            if r.exact { "exact" } else { "normal approx." }
        );
    }
}
