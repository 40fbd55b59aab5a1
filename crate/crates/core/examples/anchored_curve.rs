//! Mean score by circular offset from the anchored value, with a sine fit.

use value_probe::analysis::{anchored_curve, fit_sine};
use value_probe::gateway::{administer_all, Mode, SyntheticProvider};
use value_probe::model::Questionnaire;
use value_probe::parser::{assemble_dataset, ParseOptions};
use value_probe::prompt::{plan_run_set, PlanInputs, StrategyKind};

fn main() {
    let q = Questionnaire::synthetic();
    let plan = plan_run_set(StrategyKind::ValueAnchor, 190, 9, 0.0, &PlanInputs::default()).unwrap();
    let transcripts: Vec<_> = administer_all(&plan.sessions, &q, Mode::Batch, &SyntheticProvider::default(), 4)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    let data = assemble_dataset(&transcripts, &q, ParseOptions::default()).unwrap().matrix;

    let curve = anchored_curve(&data).unwrap();
    let fit = fit_sine(&curve.y);
    for (o, y) in curve.y.iter().enumerate() {
        let bar = "#".repeat(((y + 2.0) * 10.0).max(0.0) as usize);
        println!("{o:>2} {y:+.3} {:+.3} {bar}", fit.eval(o as f64));
    }
    println!(
        "amplitude {:.3}, phase {:.3}, offset {:+.3}, r2 {:.4}",
        fit.amplitude, fit.phase, fit.offset, fit.r_squared
    );
}
