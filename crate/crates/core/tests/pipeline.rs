use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use value_probe::config::RunConfig;
use value_probe::gateway::{CompletionRequest, GatewayError, Provider, RequestPurpose, SyntheticProvider};
use value_probe::pipeline::{cmd_analyze, cmd_synth, collect_with, PipelineError, TRANSCRIPTS};
use value_probe::prompt::StrategyKind;

fn config(out: &Path, n: usize) -> RunConfig {
    RunConfig {
        n_sessions: n,
        seed: 11,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

/// Fails every session with an odd id, once per session.
struct Flaky {
    inner: SyntheticProvider,
    failures: AtomicUsize,
}

impl Provider for Flaky {
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, GatewayError> {
        if let RequestPurpose::Questionnaire { session, .. } = request.purpose {
            if session.session_id % 2 == 1 {
                self.failures.fetch_add(1, Ordering::Relaxed);
                return Err(GatewayError::Timeout(std::time::Duration::from_secs(1)));
            }
        }
        self.inner.complete(request)
    }

    fn records_time(&self) -> bool {
        false
    }
}

#[test]
fn rerun_adds_nothing_and_leaves_store_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), 40);
    let first = cmd_synth(&c).unwrap();
    assert_eq!(first.new_sessions, 40);
    let before = std::fs::read(&first.store).unwrap();
    let second = cmd_synth(&c).unwrap();
    assert_eq!(second.new_sessions, 0);
    assert_eq!(std::fs::read(&second.store).unwrap(), before);
}

#[test]
fn interrupted_collection_resumes_to_the_same_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(&tmp.path().join("resumed"), 30);
    let flaky = Flaky {
        inner: SyntheticProvider::default(),
        failures: AtomicUsize::new(0),
    };
    let err = collect_with(&c, &flaky).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(flaky.failures.load(Ordering::Relaxed) > 0);

    let resumed = collect_with(&c, &SyntheticProvider::default()).unwrap();
    assert_eq!(resumed.new_sessions, 15);

    let straight = cmd_synth(&config(&tmp.path().join("straight"), 30)).unwrap();
    let csv = |d: &Path| std::fs::read(d.join("dataset.csv")).unwrap();
    assert_eq!(csv(&resumed.dataset_dir), csv(&straight.dataset_dir));
}

#[test]
fn analyze_does_not_modify_stores() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config(tmp.path(), 60);
    c.strategy = StrategyKind::Names;
    let o = cmd_synth(&c).unwrap();
    let before = std::fs::read(&o.store).unwrap();
    let analyzed = cmd_analyze(&[], &c).unwrap();
    assert_eq!(analyzed.reports.len(), 1);
    assert!(analyzed.failures.is_empty());
    assert_eq!(std::fs::read(&o.store).unwrap(), before);
}

#[test]
fn bad_store_is_reported_without_stopping_others() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), 30);
    let good = cmd_synth(&c).unwrap().store;
    let bad = tmp.path().join("broken").join(TRANSCRIPTS);
    std::fs::create_dir_all(bad.parent().unwrap()).unwrap();
    std::fs::write(&bad, "{\"session_id\": 1,\n").unwrap();
    let o = cmd_analyze(&[good, bad.clone()], &c).unwrap();
    assert_eq!(o.reports.len(), 1);
    assert_eq!(o.failures.len(), 1);
    assert_eq!(o.failures[0].0, bad);
    assert!(matches!(o.failures[0].1, PipelineError::Analysis(_) | PipelineError::Provider(_)));
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_value-probe"));
    cmd.env_remove("VALUE_PROBE_API_KEY");
    cmd
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

const LIVE: &str = r#"{
  "provider": {
    "kind": "live",
    "endpoint_url": "http://127.0.0.1:9/v1/chat/completions",
    "model_name": "test-model",
    "credential_env_var": "VP_TEST_CREDENTIAL",
    "timeout_secs": 2,
    "max_attempts": 1,
    "backoff_initial_ms": 1
  },
  "strategy": "names",
  "n_sessions": 2
}"#;

#[test]
fn missing_credential_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), LIVE);
    let out = bin()
        .env_remove("VP_TEST_CREDENTIAL")
        .args(["--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("runs"))
        .arg("collect")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VP_TEST_CREDENTIAL"));
}

#[test]
fn unreachable_endpoint_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), LIVE);
    let out = bin()
        .env("VP_TEST_CREDENTIAL", "sk-never-printed")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("runs"))
        .arg("collect")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("sk-never-printed"));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n_sessions": "many"}"#);
    let out = bin().arg("--config").arg(&cfg).arg("synth").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(tmp.path(), r#"{"unknown_field": 1}"#);
    let out = bin().arg("--config").arg(&cfg).arg("synth").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analysis_failures_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = bin().arg("--out").arg(&empty).arg("analyze").output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let store = tmp.path().join("truncated").join(TRANSCRIPTS);
    std::fs::create_dir_all(store.parent().unwrap()).unwrap();
    std::fs::write(&store, "").unwrap();
    let out = bin()
        .arg("--out")
        .arg(tmp.path().join("out"))
        .arg("analyze")
        .arg(&store)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn cli_end_to_end_is_deterministic() {
    let run = |root: &Path| {
        for strategy in ["value-anchor", "names"] {
            let s = bin()
                .arg("--seed")
                .arg("5")
                .arg("--out")
                .arg(root)
                .args(["synth", "--n", "60", "--strategy", strategy])
                .output()
                .unwrap();
            assert!(s.status.success());
        }
        for sub in ["analyze", "tables", "figures"] {
            let s = bin().arg("--seed").arg("5").arg("--out").arg(root).arg(sub).output().unwrap();
            assert!(s.status.success(), "{sub}");
        }
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in std::fs::read_dir(d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    files.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&tmp.path().join("a"));
    let b = run(&tmp.path().join("b"));
    assert!(a.iter().any(|(p, _)| p.extension().is_some_and(|e| e == "svg")));
    assert_eq!(a, b);
}
