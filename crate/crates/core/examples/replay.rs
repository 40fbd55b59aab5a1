//! Records a small synthetic run to a store, then replays it offline and
//! checks that the transcripts come back unchanged.

use value_probe::gateway::{administer_all, load_transcripts, record_transcripts, Mode, ReplayProvider, SyntheticProvider};
use value_probe::model::Questionnaire;
use value_probe::prompt::{plan_run_set, PlanInputs, StrategyKind};

fn main() {
    let dir = std::env::temp_dir().join(format!("value-probe-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let store = dir.join("transcripts.jsonl");

    let q = Questionnaire::synthetic();
    let plan = plan_run_set(StrategyKind::Names, 12, 5, 0.7, &PlanInputs::default()).unwrap();
    let recorded: Vec<_> = administer_all(&plan.sessions, &q, Mode::Serial, &SyntheticProvider::default(), 4)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    record_transcripts(&store, &recorded).unwrap();

    let replay = ReplayProvider::from_store(&store).unwrap();
    let replayed: Vec<_> = administer_all(&plan.sessions, &q, Mode::Serial, &replay, 4)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    println!("store {} holds {} sessions", store.display(), load_transcripts(&store).unwrap().len());
    println!("replay identical: {}", replayed == recorded);

    match administer_all(&plan.sessions[..1], &q, Mode::Batch, &replay, 1).remove(0) {
        Ok(_) => println!("unexpected: batch replay of a serial store succeeded"),
        Err(e) => println!("batch replay of serial store: {e}"),
    }
    std::fs::remove_dir_all(&dir).ok();
}
