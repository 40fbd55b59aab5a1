//! Static SVG figures drawn from structure reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{human_benchmark_profile, ValueId, VALUE_COUNT};
use crate::prompt::StrategyKind;
use crate::report::{group_key, ReportError, StructureReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureKind {
    RankHeatmap,
    MdsScatter,
    AnchoredCurve,
    ValueRankingSort,
}

impl FigureKind {
    pub const ALL: [FigureKind; 4] = [
        FigureKind::RankHeatmap,
        FigureKind::MdsScatter,
        FigureKind::AnchoredCurve,
        FigureKind::ValueRankingSort,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            FigureKind::RankHeatmap => "rank-heatmap",
            FigureKind::MdsScatter => "mds-scatter",
            FigureKind::AnchoredCurve => "anchored-curve",
            FigureKind::ValueRankingSort => "value-ranking-sort",
        }
    }
}

impl std::str::FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| format!("unknown figure kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            esc(s)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"/>"#
        );
    }

    fn polyline(&mut self, class: &str, pts: &[(f64, f64)], stroke: &str) {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            p.join(" ")
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
             width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Linear map from a data interval to a pixel interval.
#[derive(Clone, Copy)]
struct Axis {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if (d1 - d0).abs() < 1e-12 {
            (d0 - 1.0, d1 + 1.0)
        } else {
            (d0, d1)
        };
        Self { d0, d1, p0, p1 }
    }

    fn at(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn y_ticks(svg: &mut Svg, ay: &Axis, x: f64) {
    for k in 0..=4 {
        let v = ay.d0 + (ay.d1 - ay.d0) * k as f64 / 4.0;
        let y = ay.at(v);
        svg.line(x - 4.0, y, x, y, "#888");
        svg.text(x - 6.0, y + 3.0, 9.0, "end", &format!("{v:.2}"));
    }
}

/// Blue for −1, white for 0, red for +1.
fn diverging(r: f64) -> String {
    let t = r.clamp(-1.0, 1.0);
    let (red, green, blue) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("rgb({:.0},{:.0},{:.0})", red, green, blue)
}

/// Grid of Spearman ρ against the human ranking: one row per model
/// (with temperature and mode), one column per strategy.
pub fn rank_heatmap(reports: &[StructureReport]) -> String {
    let mut rows: BTreeMap<(String, String, String), BTreeMap<StrategyKind, Option<f64>>> =
        BTreeMap::new();
    for r in reports {
        let row = rows.entry(group_key(r)).or_default();
        if let Some(k) = r.strategy_kind() {
            row.insert(k, r.spearman_vs_human);
        }
    }
    let (cell_w, cell_h, left, top) = (90.0, 32.0, 230.0, 60.0);
    let width = left + cell_w * 5.0 + 90.0;
    let height = top + cell_h * rows.len().max(1) as f64 + 30.0;
    let mut svg = Svg::new(width, height);
    svg.text(width / 2.0, 22.0, 14.0, "middle", "Spearman correlation with human value ranking");
    for (c, kind) in StrategyKind::ALL.iter().enumerate() {
        svg.text(left + cell_w * (c as f64 + 0.5), top - 8.0, 11.0, "middle", kind.title());
    }
    for (r, ((model, temp, mode), cells)) in rows.iter().enumerate() {
        let y = top + cell_h * r as f64;
        svg.text(left - 8.0, y + cell_h * 0.62, 11.0, "end", &format!("{model} (t={temp}, {mode})"));
        for (c, kind) in StrategyKind::ALL.iter().enumerate() {
            let x = left + cell_w * c as f64;
            let rho = cells.get(kind).copied().flatten();
            let fill = rho.map_or_else(|| "rgb(230,230,230)".to_string(), diverging);
            let _ = writeln!(
                svg.body,
                r#"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="white"/>"#
            );
            let label = rho.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
            svg.text(x + cell_w / 2.0, y + cell_h * 0.62, 11.0, "middle", &label);
        }
    }
    // color scale
    let sx = left + cell_w * 5.0 + 30.0;
    for k in 0..=20 {
        let v = 1.0 - k as f64 / 10.0;
        let _ = writeln!(
            svg.body,
            r#"<rect x="{sx}" y="{:.2}" width="16" height="6" fill="{}"/>"#,
            top + k as f64 * 6.0,
            diverging(v)
        );
    }
    svg.text(sx + 20.0, top + 6.0, 9.0, "start", "1");
    svg.text(sx + 20.0, top + 66.0, 9.0, "start", "0");
    svg.text(sx + 20.0, top + 126.0, 9.0, "start", "-1");
    svg.finish()
}

const PANEL: f64 = 420.0;

fn scatter_panel(svg: &mut Svg, report: &StructureReport, y0: f64) -> Result<(), String> {
    let a = report
        .aligned_embedding
        .as_ref()
        .ok_or("report has no aligned embedding")?;
    let all = a.aligned.iter().chain(&a.reference);
    let extent = all
        .flat_map(|p| [p[0].abs(), p[1].abs()])
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.15;
    let ax = Axis::new(-extent, extent, 30.0, PANEL - 30.0);
    let ay = Axis::new(-extent, extent, y0 + PANEL - 30.0, y0 + 40.0);
    let ssd = report
        .procrustes_ssd
        .map_or_else(String::new, |s| format!(", SSD {s:.3}"));
    svg.text(PANEL / 2.0, y0 + 22.0, 13.0, "middle", &format!("{}{ssd}", report.dataset.name));
    svg.line(ax.at(-extent), ay.at(0.0), ax.at(extent), ay.at(0.0), "#ddd");
    svg.line(ax.at(0.0), ay.at(-extent), ax.at(0.0), ay.at(extent), "#ddd");
    for ((v, p), q) in a.values.iter().zip(&a.aligned).zip(&a.reference) {
        let (rx, ry) = (ax.at(q[0]), ay.at(q[1]));
        let (mx, my) = (ax.at(p[0]), ay.at(p[1]));
        let _ = writeln!(
            svg.body,
            r##"<circle class="reference" data-value="{c}" cx="{rx:.2}" cy="{ry:.2}" r="4" fill="none" stroke="#555"/>"##,
            c = v.code()
        );
        let _ = writeln!(
            svg.body,
            r##"<g class="model" data-value="{c}" transform="translate({mx:.2},{my:.2})"><path d="M-4,-4L4,4M-4,4L4,-4" stroke="#c03"/></g>"##,
            c = v.code()
        );
        svg.text(mx + 6.0, my - 4.0, 9.0, "start", v.code());
    }
    svg.text(40.0, y0 + PANEL - 10.0, 9.0, "start", "o human reference   x model (aligned)");
    Ok(())
}

fn curve_panel(svg: &mut Svg, report: &StructureReport, y0: f64) -> Result<(), String> {
    let curve = report.anchored_curve.as_ref().ok_or("report has no anchored curve")?;
    let fit = report.sine_fit.as_ref().ok_or("report has no sine fit")?;
    let fitted: Vec<(f64, f64)> = (0..=180).map(|k| {
        let o = k as f64 / 10.0;
        (o, fit.eval(o))
    }).collect();
    let lo = curve.y.iter().copied().chain(fitted.iter().map(|p| p.1)).fold(f64::MAX, f64::min);
    let hi = curve.y.iter().copied().chain(fitted.iter().map(|p| p.1)).fold(f64::MIN, f64::max);
    let pad = (hi - lo).max(1e-6) * 0.1;
    let ax = Axis::new(0.0, 18.0, 80.0, 2.0 * PANEL - 30.0);
    let ay = Axis::new(lo - pad, hi + pad, y0 + PANEL - 40.0, y0 + 40.0);
    svg.text(
        PANEL,
        y0 + 22.0,
        13.0,
        "middle",
        &format!("{}: amplitude {:.2}, r² {:.3}", report.dataset.name, fit.amplitude, fit.r_squared),
    );
    svg.line(ax.at(0.0), ay.at(0.0), ax.at(18.0), ay.at(0.0), "#ddd");
    y_ticks(svg, &ay, ax.p0 - 14.0);
    for o in 0..VALUE_COUNT {
        svg.text(ax.at(o as f64), y0 + PANEL - 22.0, 9.0, "middle", &o.to_string());
    }
    svg.text(ax.at(9.0), y0 + PANEL - 6.0, 10.0, "middle", "offset from anchored value");
    svg.polyline(
        "fit",
        &fitted.iter().map(|&(o, v)| (ax.at(o), ay.at(v))).collect::<Vec<_>>(),
        "#c03",
    );
    for (o, v) in curve.y.iter().enumerate() {
        let _ = writeln!(
            svg.body,
            r##"<circle class="point" data-offset="{o}" cx="{:.2}" cy="{:.2}" r="3.5" fill="#246"/>"##,
            ax.at(o as f64),
            ay.at(*v)
        );
    }
    Ok(())
}

/// Mean centered score per value, values laid out in human rank order.
pub fn value_ranking_sort(reports: &[StructureReport]) -> String {
    let order = human_benchmark_profile().rank_order();
    let human = human_benchmark_profile();
    let mut series: Vec<(String, Vec<f64>)> = vec![(
        "human".to_string(),
        order.iter().map(|&v| human.get(v).mean_centered_score).collect(),
    )];
    for r in reports {
        let by_value: BTreeMap<ValueId, f64> =
            r.values.iter().copied().zip(r.mean_profile.iter().copied()).collect();
        series.push((
            r.dataset.name.clone(),
            order.iter().map(|v| by_value.get(v).copied().unwrap_or(f64::NAN)).collect(),
        ));
    }
    let finite = series.iter().flat_map(|s| s.1.iter()).filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::MAX, |a, &b| a.min(b));
    let hi = finite.fold(f64::MIN, |a, &b| a.max(b));
    let (width, height) = (760.0, 420.0 + 14.0 * series.len() as f64);
    let ax = Axis::new(0.0, 18.0, 80.0, width - 30.0);
    let ay = Axis::new(lo - 0.1, hi + 0.1, 360.0, 40.0);
    let mut svg = Svg::new(width, height);
    svg.text(width / 2.0, 22.0, 14.0, "middle", "Mean centered score by value (human rank order)");
    svg.line(ax.at(0.0), ay.at(0.0), ax.at(18.0), ay.at(0.0), "#ddd");
    y_ticks(&mut svg, &ay, ax.p0 - 14.0);
    for (i, v) in order.iter().enumerate() {
        svg.text(ax.at(i as f64), 380.0, 9.0, "middle", v.code());
    }
    const COLORS: [&str; 6] = ["#222", "#c03", "#246", "#393", "#a60", "#739"];
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(i, y)| (ax.at(i as f64), ay.at(*y)))
            .collect();
        svg.polyline("series", &pts, color);
        let ly = 400.0 + 14.0 * k as f64;
        svg.line(60.0, ly - 4.0, 80.0, ly - 4.0, color);
        svg.text(86.0, ly, 10.0, "start", name);
    }
    svg.finish()
}

fn panels(
    reports: &[StructureReport],
    width: f64,
    draw: fn(&mut Svg, &StructureReport, f64) -> Result<(), String>,
    names: &[PathBuf],
) -> Result<String, ReportError> {
    let mut svg = Svg::new(width, PANEL * reports.len().max(1) as f64);
    for (i, r) in reports.iter().enumerate() {
        draw(&mut svg, r, PANEL * i as f64).map_err(|detail| ReportError::MalformedReport {
            path: names.get(i).map_or_else(|| r.dataset.name.clone(), |p| p.display().to_string()),
            detail,
        })?;
    }
    Ok(svg.finish())
}

pub fn mds_scatter(reports: &[StructureReport]) -> Result<String, ReportError> {
    panels(reports, PANEL, scatter_panel, &[])
}

pub fn anchored_curve_figure(reports: &[StructureReport]) -> Result<String, ReportError> {
    panels(reports, 2.0 * PANEL, curve_panel, &[])
}

/// Loads the inputs and writes one SVG.
pub fn render_figures(spec: &FigureSpec) -> Result<PathBuf, ReportError> {
    let reports = spec
        .inputs
        .iter()
        .map(StructureReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let svg = match spec.kind {
        FigureKind::RankHeatmap => rank_heatmap(&reports),
        FigureKind::ValueRankingSort => value_ranking_sort(&reports),
        FigureKind::MdsScatter => panels(&reports, PANEL, scatter_panel, &spec.inputs)?,
        FigureKind::AnchoredCurve => panels(&reports, 2.0 * PANEL, curve_panel, &spec.inputs)?,
    };
    if let Some(parent) = spec.output.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&spec.output, svg)?;
    Ok(spec.output.clone())
}

/// Every figure that applies to the given reports, written into `dir`.
pub fn render_all(report_paths: &[PathBuf], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let reports = report_paths
        .iter()
        .map(StructureReport::load)
        .collect::<Result<Vec<_>, _>>()?;
    let pick = |f: fn(&StructureReport) -> bool| -> Vec<PathBuf> {
        report_paths
            .iter()
            .zip(&reports)
            .filter(|(_, r)| f(r))
            .map(|(p, _)| p.clone())
            .collect()
    };
    let mut out = Vec::new();
    for (kind, inputs) in [
        (FigureKind::RankHeatmap, report_paths.to_vec()),
        (FigureKind::ValueRankingSort, report_paths.to_vec()),
        (FigureKind::MdsScatter, pick(|r| r.aligned_embedding.is_some())),
        (FigureKind::AnchoredCurve, pick(|r| r.anchored_curve.is_some() && r.sine_fit.is_some())),
    ] {
        if inputs.is_empty() {
            continue;
        }
        out.push(render_figures(&FigureSpec {
            kind,
            inputs,
            output: dir.join(format!("{}.svg", kind.slug())),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{AnchoredCurve, SineFit};
    use crate::report::{AlignedEmbedding, DatasetInfo};
    use quick_xml::events::Event;
    use quick_xml::Reader;

    fn stub(strategy: StrategyKind, rho: f64) -> StructureReport {
        StructureReport {
            dataset: DatasetInfo {
                name: format!("m-{strategy}"),
                model: "m".into(),
                strategy: strategy.slug().into(),
                temperature: 0.0,
                mode: "batch".into(),
                n_sessions: 3,
                n_excluded: 0,
            },
            values: ValueId::ALL.to_vec(),
            mean_profile: vec![0.0; 19],
            ranks: vec![10.0; 19],
            spearman_vs_human: Some(rho),
            cronbach_alpha: vec![None; 19],
            correlation_matrix: None,
            embedding: None,
            stress1: None,
            procrustes_ssd: Some(0.0),
            aligned_embedding: None,
            anchored_curve: None,
            sine_fit: None,
            errors: Default::default(),
        }
    }

    /// Element names and attributes, checking well-formedness on the way.
    fn elements(svg: &str) -> Vec<(String, BTreeMap<String, String>)> {
        let mut reader = Reader::from_str(svg);
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut roots = 0;
        loop {
            let event = reader.read_event().expect("well-formed");
            let (e, opens) = match event {
                Event::Start(e) => (e, true),
                Event::Empty(e) => (e, false),
                Event::End(_) => {
                    depth -= 1;
                    continue;
                }
                Event::Eof => break,
                _ => continue,
            };
            if depth == 0 {
                roots += 1;
            }
            if opens {
                depth += 1;
            }
            let attrs = e
                .attributes()
                .map(|a| {
                    let a = a.unwrap();
                    (
                        String::from_utf8(a.key.as_ref().to_vec()).unwrap(),
                        a.unescape_value().unwrap().to_string(),
                    )
                })
                .collect();
            out.push((String::from_utf8(e.name().as_ref().to_vec()).unwrap(), attrs));
        }
        assert_eq!(depth, 0);
        assert_eq!(roots, 1);
        out
    }

    fn texts(svg: &str) -> Vec<String> {
        let mut reader = Reader::from_str(svg);
        let mut out = Vec::new();
        loop {
            match reader.read_event().unwrap() {
                Event::Text(t) => out.push(t.unescape().unwrap().trim().to_string()),
                Event::Eof => break,
                _ => {}
            }
        }
        out
    }

    #[test]
    fn heatmap_labels_every_cell() {
        let reports: Vec<_> = StrategyKind::ALL.iter().map(|&k| stub(k, 1.0)).collect();
        let svg = rank_heatmap(&reports);
        assert_eq!(texts(&svg).iter().filter(|t| *t == "1.00").count(), 5);
        let cells = elements(&svg).into_iter().filter(|(n, a)| n == "rect" && a.get("class").map(String::as_str) == Some("cell")).count();
        assert_eq!(cells, 5);
    }

    #[test]
    fn scatter_glyphs_coincide_for_identical_embeddings() {
        let mut r = stub(StrategyKind::Names, 0.5);
        let pts: Vec<[f64; 2]> = ValueId::ALL.iter().map(|v| [v.angle().cos(), v.angle().sin()]).collect();
        r.aligned_embedding = Some(AlignedEmbedding {
            values: ValueId::ALL.to_vec(),
            aligned: pts.clone(),
            reference: pts,
        });
        let svg = mds_scatter(&[r]).unwrap();
        let els = elements(&svg);
        let refs: Vec<(f64, f64)> = els
            .iter()
            .filter(|(n, _)| n == "circle")
            .map(|(_, a)| (a["cx"].parse().unwrap(), a["cy"].parse().unwrap()))
            .collect();
        let models: Vec<(f64, f64)> = els
            .iter()
            .filter(|(n, a)| n == "g" && a.get("class").map(String::as_str) == Some("model"))
            .map(|(_, a)| {
                let t = a["transform"].trim_start_matches("translate(").trim_end_matches(')');
                let (x, y) = t.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        assert_eq!(refs.len(), 19);
        assert_eq!(refs, models);
    }

    #[test]
    fn curve_figure_needs_curve() {
        let r = stub(StrategyKind::Basic, 0.1);
        assert!(matches!(anchored_curve_figure(&[r]), Err(ReportError::MalformedReport { .. })));
    }

    #[test]
    fn curve_figure_is_valid_svg() {
        let mut r = stub(StrategyKind::ValueAnchor, 0.1);
        let y: Vec<f64> = (0..19).map(|o| (std::f64::consts::TAU * o as f64 / 19.0).cos()).collect();
        r.anchored_curve = Some(AnchoredCurve { y, counts: vec![1; 19] });
        r.sine_fit = Some(SineFit { amplitude: 1.0, phase: 0.0, offset: 0.0, r_squared: 1.0 });
        let svg = anchored_curve_figure(&[r]).unwrap();
        let els = elements(&svg);
        assert_eq!(els[0].0, "svg");
        let vb: Vec<f64> = els[0].1["viewBox"].split(' ').map(|v| v.parse().unwrap()).collect();
        assert!(vb[2] > 0.0 && vb[3] > 0.0);
        assert_eq!(els.iter().filter(|(n, _)| n == "circle").count(), 19);
    }

    #[test]
    fn ranking_sort_orders_by_human_rank() {
        let svg = value_ranking_sort(&[stub(StrategyKind::Basic, 0.0)]);
        let t = texts(&svg);
        let codes: Vec<&String> = t.iter().filter(|s| s.parse::<ValueId>().is_ok() && s.len() <= 3).collect();
        assert_eq!(codes.first().map(|s| s.as_str()), Some("BEC"));
        assert_eq!(codes.last().map(|s| s.as_str()), Some("POD"));
    }
}
