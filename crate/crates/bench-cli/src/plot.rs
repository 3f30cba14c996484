//! Deterministic SVG line charts of metrics curves.

use std::fmt::Write as _;

use thiserror::Error;
use tpil_core::orchestrator::MetricsRow;

use crate::metrics::column;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_Y: f64 = 40.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlotError {
    #[error("unknown metrics column '{0}'")]
    Column(String),
    #[error("series '{0}' has no rows")]
    Empty(String),
    #[error("nothing to plot")]
    NoSeries,
}

/// One legend entry: a label and one or more runs (seeds) of the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub runs: Vec<Vec<MetricsRow>>,
}

/// Mean and population standard deviation across runs at each shared
/// iteration (runs are truncated to the shortest).
pub fn mean_and_std(runs: &[Vec<(f64, f64)>]) -> Vec<(f64, f64, f64)> {
    let len = runs.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let n = runs.len() as f64;
            let mean = runs.iter().map(|r| r[i].1).sum::<f64>() / n;
            let var = runs.iter().map(|r| (r[i].1 - mean).powi(2)).sum::<f64>() / n;
            (runs[0][i].0, mean, var.sqrt())
        })
        .collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders `series` against the iteration axis. Series with several runs
/// are drawn as their mean with a shaded band of one standard deviation.
pub fn render_svg(series: &[Series], metric: &str, title: &str) -> Result<String, PlotError> {
    if series.is_empty() {
        return Err(PlotError::NoSeries);
    }
    let mut curves = Vec::new();
    for s in series {
        let runs: Vec<Vec<(f64, f64)>> = s
            .runs
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|r| column(r, metric).map(|y| (r.iter as f64, y)).ok_or_else(|| PlotError::Column(metric.into())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        let stats = mean_and_std(&runs);
        if stats.is_empty() {
            return Err(PlotError::Empty(s.label.clone()));
        }
        curves.push((s.label.as_str(), runs.len() > 1, stats));
    }
    let (x0, x1) = extent(curves.iter().flat_map(|c| c.2.iter().map(|p| p.0)));
    let (y0, y1) = extent(curves.iter().flat_map(|c| {
        let band = c.1;
        c.2.iter().flat_map(move |&(_, m, s)| if band { [m - s, m + s] } else { [m, m] })
    }));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_Y + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="20" font-size="13">{}</text>"#, MARGIN_LEFT, escape(title));
    let (bottom, right) = (MARGIN_Y + plot_h, MARGIN_LEFT + plot_w);
    let _ = writeln!(svg, r#"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_Y:.2}" x2="{MARGIN_LEFT:.2}" y2="{bottom:.2}" stroke="black"/>"#);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(svg, r#"<line x1="{tx:.2}" y1="{bottom:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 4.0);
        let _ = writeln!(svg, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 16.0, fmt_tick(xv));
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{MARGIN_LEFT:.2}" y2="{ty:.2}" stroke="black"/>"#, MARGIN_LEFT - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 6.0, ty + 4.0, fmt_tick(yv));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#, MARGIN_LEFT + plot_w / 2.0, HEIGHT - 6.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        MARGIN_Y + plot_h / 2.0,
        MARGIN_Y + plot_h / 2.0,
        escape(metric)
    );
    for (k, (label, band, stats)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if *band {
            let upper = stats.iter().map(|&(x, m, s)| format!("{:.2},{:.2}", px(x), py(m + s)));
            let lower = stats.iter().rev().map(|&(x, m, s)| format!("{:.2},{:.2}", px(x), py(m - s)));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
        }
        let pts: Vec<String> = stats.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", px(x), py(m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = MARGIN_Y + 16.0 * k as f64;
        let _ = writeln!(svg, r#"<rect x="{:.2}" y="{:.2}" width="12" height="3" fill="{color}"/>"#, right + 12.0, ly);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right + 30.0, ly + 5.0, escape(label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
