use std::collections::BTreeMap;
use std::path::Path;

use value_probe::parser::{parse_scores, parse_single_score, ParseOptions};

#[derive(serde::Deserialize)]
struct Expected {
    mode: String,
    scores: Option<Vec<u8>>,
    error: Option<String>,
}

fn corpus() -> (std::path::PathBuf, BTreeMap<String, Expected>) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/parser");
    let text = std::fs::read_to_string(dir.join("expected.json")).unwrap();
    (dir, serde_json::from_str(&text).unwrap())
}

#[test]
fn every_fixture_has_an_expectation() {
    let (dir, expected) = corpus();
    let on_disk: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".txt"))
        .collect();
    assert!(on_disk.len() >= 20);
    for name in on_disk {
        assert!(expected.contains_key(&name), "{name} has no expectation");
    }
}

#[test]
fn golden_corpus() {
    let (dir, expected) = corpus();
    for (file, want) in expected {
        let raw = std::fs::read_to_string(dir.join(&file)).unwrap();
        let got = if want.mode == "serial" {
            parse_single_score(&raw, 1).map(|s| vec![s])
        } else {
            parse_scores(&raw, ParseOptions::default()).map(|v| v.scores().to_vec())
        };
        match (got, want.scores, want.error) {
            (Ok(s), Some(w), None) => assert_eq!(s, w, "{file}"),
            (Err(e), None, Some(kind)) => assert_eq!(e.kind(), kind, "{file}: {e}"),
            (got, _, _) => panic!("{file}: unexpected {got:?}"),
        }
    }
}
