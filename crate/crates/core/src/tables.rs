//! CSV tables derived from structure reports.

use std::collections::BTreeMap;
use std::io::Write;

use crate::model::{human_benchmark_profile, ValueId};
use crate::prompt::StrategyKind;
use crate::report::{check_ssd_ordering, format_rank, group_key, ReportError, StructureReport};

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Values in human rank order with the human mean and rank, followed by a
/// mean and rank column pair per report.
pub fn write_values_table<W: Write>(out: W, reports: &[StructureReport]) -> Result<(), ReportError> {
    let human = human_benchmark_profile();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "value".to_string(),
        "name".to_string(),
        "human_mean".to_string(),
        "human_rank".to_string(),
    ];
    for r in reports {
        header.push(format!("{}_mean", r.dataset.name));
        header.push(format!("{}_rank", r.dataset.name));
    }
    w.write_record(&header)?;
    for value in human.rank_order() {
        let entry = human.get(value);
        let mut row = vec![
            value.code().to_string(),
            value.display_name().to_string(),
            format!("{:.2}", entry.mean_centered_score),
            entry.rank.to_string(),
        ];
        for r in reports {
            let i = r.values.iter().position(|&v| v == value);
            row.push(num(i.map(|i| r.mean_profile[i])));
            row.push(i.map(|i| format_rank(r.ranks[i])).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// SSD per (model, temperature, mode) row and strategy column.
pub fn write_ssd_table<W: Write>(out: W, reports: &[StructureReport]) -> Result<(), ReportError> {
    let mut rows: BTreeMap<(String, String, String), BTreeMap<StrategyKind, f64>> = BTreeMap::new();
    for r in reports {
        let row = rows.entry(group_key(r)).or_default();
        if let (Some(kind), Some(ssd)) = (r.strategy_kind(), r.procrustes_ssd) {
            row.insert(kind, ssd);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["model".to_string(), "temperature".to_string(), "mode".to_string()];
    header.extend(StrategyKind::ALL.iter().map(|k| k.slug().to_string()));
    w.write_record(&header)?;
    for ((model, temperature, mode), cells) in rows {
        let mut row = vec![model, temperature, mode];
        row.extend(StrategyKind::ALL.iter().map(|k| num(cells.get(k).copied())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per report with the headline statistics and the anchored curve;
/// curve columns stay empty for datasets without anchors.
pub fn write_summary_table<W: Write>(out: W, reports: &[StructureReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "dataset",
        "model",
        "strategy",
        "temperature",
        "mode",
        "n_sessions",
        "n_excluded",
        "spearman_vs_human",
        "stress1",
        "procrustes_ssd",
        "sine_amplitude",
        "sine_phase",
        "sine_offset",
        "sine_r_squared",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..19).map(|o| format!("curve_{o}")));
    w.write_record(&header)?;
    for r in reports {
        let d = &r.dataset;
        let fit = r.sine_fit.as_ref();
        let mut row = vec![
            d.name.clone(),
            d.model.clone(),
            d.strategy.clone(),
            format!("{}", d.temperature),
            d.mode.clone(),
            d.n_sessions.to_string(),
            d.n_excluded.to_string(),
            num(r.spearman_vs_human),
            num(r.stress1),
            num(r.procrustes_ssd),
            num(fit.map(|f| f.amplitude)),
            num(fit.map(|f| f.phase)),
            num(fit.map(|f| f.offset)),
            num(fit.map(|f| f.r_squared)),
        ];
        row.extend((0..19).map(|o| num(r.anchored_curve.as_ref().map(|c| c.y[o]))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ssd_ordering<W: Write>(out: W, reports: &[StructureReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "temperature", "mode", "value_anchor_ssd", "names_ssd", "holds"])?;
    for c in check_ssd_ordering(reports) {
        w.write_record([
            c.model,
            format!("{}", c.temperature),
            c.mode,
            format!("{:.4}", c.value_anchor_ssd),
            format!("{:.4}", c.names_ssd),
            c.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every table into `dir`, returning the paths written.
pub fn export_tables(
    reports: &[StructureReport],
    dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, ReportError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> Result<(), ReportError>| {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = dir.join(name);
        std::fs::write(&path, buf)?;
        written.push(path);
        Ok::<(), ReportError>(())
    };
    emit("values.csv", &|b| write_values_table(b, reports))?;
    emit("ssd.csv", &|b| write_ssd_table(b, reports))?;
    emit("summary.csv", &|b| write_summary_table(b, reports))?;
    emit("ssd_ordering.csv", &|b| write_ssd_ordering(b, reports))?;
    Ok(written)
}

/// Value codes in human rank order.
pub fn human_order() -> Vec<ValueId> {
    human_benchmark_profile().rank_order()
}
