//! SVG rendering of a score curve with its selected keyframes.

use std::fmt::Write as _;
use std::path::Path;

use crate::coverage::BinTree;
use crate::error::{AksError, Result};
use crate::series::{KeyframeSelection, ScoreSeries};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;

/// Renders the score polyline, one `class="keyframe"` marker per selected
/// frame and the bin boundaries of levels `1..=max_level` of the selection's
/// parameters.
pub fn render_plot(series: &ScoreSeries, selection: &KeyframeSelection) -> Result<String> {
    selection.check_horizon(series.len())?;
    let scores = series.scores();
    let n = scores.len();
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |i: f64| MARGIN + if n > 1 { i / (n - 1) as f64 * plot_w } else { plot_w / 2.0 };
    let y = |s: f64| MARGIN + (hi - s) / (hi - lo) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{} ({}, M={}, L={}, s_thr={})</text>"#,
        escape(&selection.source_series_id),
        selection.strategy,
        selection.params.m,
        selection.params.max_level,
        selection.params.s_thr
    )
    .unwrap();

    let levels = selection.params.max_level;
    if levels > 0 {
        let tree = BinTree::new(n, levels);
        let mut bounds: Vec<usize> = (1..=levels)
            .flat_map(|l| tree.level(l).iter().map(|r| r.start))
            .filter(|&b| b > 0 && b < n)
            .collect();
        bounds.sort_unstable();
        bounds.dedup();
        for b in bounds {
            // boundary sits between frames b-1 and b
            let bx = x(b as f64 - 0.5);
            writeln!(
                svg,
                r##"<line class="bin-boundary" x1="{bx:.2}" y1="{MARGIN}" x2="{bx:.2}" y2="{:.2}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
                HEIGHT - MARGIN
            )
            .unwrap();
        }
    }

    let points: Vec<String> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| format!("{:.2},{:.2}", x(i as f64), y(s)))
        .collect();
    writeln!(
        svg,
        r##"<polyline class="scores" fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    )
    .unwrap();
    for &i in selection.indices() {
        writeln!(
            svg,
            r##"<circle class="keyframe" cx="{:.2}" cy="{:.2}" r="4" fill="#d62728"><title>frame {i} t={} s={}</title></circle>"##,
            x(i as f64),
            y(scores[i]),
            series.timestamps()[i],
            scores[i]
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot(series: &ScoreSeries, selection: &KeyframeSelection, path: &Path) -> Result<()> {
    let svg = render_plot(series, selection)?;
    std::fs::write(path, svg).map_err(|e| AksError::io(path, e))
}
