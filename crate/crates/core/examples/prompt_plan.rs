//! Renders one prompt per strategy and summarizes a planned run set.
//!
//! cargo run --example prompt_plan -- names 8

use value_probe::gateway::{SyntheticProvider, SYNTHETIC_PERSONA};
use value_probe::prompt::{generate_personas, plan_run_set, render_prompt, PlanInputs, StrategyKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let kind: StrategyKind = args.next().map_or(StrategyKind::ValueAnchor, |s| s.parse().expect("strategy"));
    let n: usize = args.next().map_or(6, |s| s.parse().expect("session count"));

    let mut inputs = PlanInputs::default();
    if kind == StrategyKind::GeneratedPersona {
        inputs.personas = generate_personas(n, &SyntheticProvider::default(), 1).expect("personas");
        println!("(personas from the offline provider: {SYNTHETIC_PERSONA:?})");
    }
    let plan = plan_run_set(kind, n, 1, 0.0, &inputs).expect("plan");
    for s in &plan.sessions {
        let prompt = render_prompt(&s.strategy).expect("render");
        println!("--- session {} ({}, seed {:#x})", s.session_id, s.gender_version, s.seed);
        println!("{prompt}");
    }
}
