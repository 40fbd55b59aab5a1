//! Correlation structure and 2-D embedding of a synthetic population.
//!
//! cargo run --release --example circumplex_mds -- 300 0.5

use value_probe::analysis::{correlation_matrix, cronbach_by_value, mds_embed, Dissimilarity, MdsOptions};
use value_probe::gateway::{administer_all, Mode, SyntheticProvider};
use value_probe::model::{Questionnaire, ValueId};
use value_probe::parser::{assemble_dataset, ParseOptions};
use value_probe::prompt::{plan_run_set, PlanInputs, StrategyKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(300, |s| s.parse().unwrap());
    let sigma: f64 = args.next().map_or(0.5, |s| s.parse().unwrap());

    let q = Questionnaire::synthetic();
    let plan = plan_run_set(StrategyKind::ValueAnchor, n, 3, 0.0, &PlanInputs::default()).unwrap();
    let provider = SyntheticProvider {
        noise_sigma: sigma,
        ..SyntheticProvider::default()
    };
    let transcripts: Vec<_> = administer_all(&plan.sessions, &q, Mode::Batch, &provider, 8)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    let data = assemble_dataset(&transcripts, &q, ParseOptions::default()).unwrap().matrix;

    let c = correlation_matrix(&data).unwrap();
    let sdt = ValueId::SelfDirectionThought;
    print!("r(SDT, .):");
    for v in ValueId::ALL {
        print!(" {:+.2}", c.get(sdt, v).unwrap_or(f64::NAN));
    }
    println!();

    for (v, alpha) in cronbach_by_value(&data).iter().take(4) {
        println!("alpha {v}: {:.3}", alpha.as_ref().map_or(f64::NAN, |a| *a));
    }

    for d in [Dissimilarity::SqrtTwoOneMinusR, Dissimilarity::OneMinusR] {
        let options = MdsOptions {
            dissimilarity: d,
            ..MdsOptions::default()
        };
        let e = mds_embed(&c, 3, &options).unwrap();
        println!(
            "{d:?}: stress-1 {:.4}, circle neighbours kept {}/19",
            e.stress1,
            e.neighbor_agreement()
        );
    }
}
