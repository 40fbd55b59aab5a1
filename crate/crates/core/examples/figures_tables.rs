//! Full offline pipeline: synthesize two datasets, analyze them, and write
//! tables and SVG figures.
//!
//! cargo run --release --example figures_tables -- /tmp/value-probe-demo

use std::path::PathBuf;

use value_probe::config::RunConfig;
use value_probe::pipeline::{cmd_analyze, cmd_figures, cmd_synth, cmd_tables};
use value_probe::prompt::StrategyKind;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("value-probe-demo"), PathBuf::from);
    let mut config = RunConfig {
        n_sessions: 190,
        output_dir: out.clone(),
        ..RunConfig::default()
    };
    for strategy in [StrategyKind::ValueAnchor, StrategyKind::Names] {
        config.strategy = strategy;
        let o = cmd_synth(&config).unwrap();
        println!("collected {} ({} new)", o.store.display(), o.new_sessions);
    }
    let analyzed = cmd_analyze(&[], &config).unwrap();
    for r in &analyzed.reports {
        println!("report {}", r.display());
    }
    for p in cmd_tables(&[], None, &config).unwrap() {
        println!("table {}", p.display());
    }
    for p in cmd_figures(&[], None, None, &config).unwrap() {
        println!("figure {}", p.display());
    }
}
