//! Administers the questionnaire to the synthetic respondent in batch and
//! serial mode and shows that both protocols yield the same scores at zero
//! noise.

use value_probe::gateway::{administer, Mode, SyntheticProvider};
use value_probe::model::Questionnaire;
use value_probe::parser::parse_transcript;
use value_probe::parser::ParseOptions;
use value_probe::prompt::{plan_run_set, PlanInputs, StrategyKind};

fn main() {
    let q = Questionnaire::synthetic();
    let plan = plan_run_set(StrategyKind::ValueAnchor, 3, 42, 0.0, &PlanInputs::default()).unwrap();
    let provider = SyntheticProvider {
        noise_sigma: 0.0,
        ..SyntheticProvider::default()
    };

    for session in &plan.sessions {
        let batch = administer(session, &q, Mode::Batch, &provider).unwrap();
        let serial = administer(session, &q, Mode::Serial, &provider).unwrap();
        let b = parse_transcript(&batch, ParseOptions::default()).unwrap();
        let s = parse_transcript(&serial, ParseOptions::default()).unwrap();
        println!(
            "session {} anchor {:?}: batch exchanges {}, serial exchanges {}, same scores {}",
            session.session_id,
            session.strategy.anchor_value().map(|v| v.code()),
            batch.raw_exchanges.len(),
            serial.raw_exchanges.len(),
            b == s
        );
    }

    let t = administer(&plan.sessions[0], &q, Mode::Batch, &provider).unwrap();
    let completion = &t.raw_exchanges[0].completion;
    println!("\nfirst batch completion:\n{}", completion.lines().take(5).collect::<Vec<_>>().join("\n"));
}
