//! Minimal SVG line chart for retained-samples curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::retention::RetentionCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render all curves into one chart. X is the retained fraction,
/// decreasing to the right; Y is the metric value.
pub fn curves_to_svg(curves: &[RetentionCurve]) -> Result<String> {
    let first = curves
        .first()
        .ok_or_else(|| Error::GridMismatch("no curves to plot".into()))?;
    for c in &curves[1..] {
        if c.fractions != first.fractions {
            return Err(Error::GridMismatch(format!(
                "{} and {} use different fraction grids",
                first.rule, c.rule
            )));
        }
        if c.metric != first.metric {
            return Err(Error::GridMismatch(format!(
                "{} plots {} but {} plots {}",
                first.rule, first.metric, c.rule, c.metric
            )));
        }
    }
    if first.fractions.is_empty() {
        return Err(Error::GridMismatch("empty fraction grid".into()));
    }

    let (x_hi, x_lo) = first
        .fractions
        .iter()
        .fold((f64::MIN, f64::MAX), |(hi, lo), &f| (hi.max(f), lo.min(f)));
    let (mut y_lo, mut y_hi) = curves
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.05;
        y_hi += 0.05;
    } else {
        let pad = 0.05 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let sx = |f: f64| MARGIN_LEFT + (x_hi - f) / x_span * plot_w;
    let sy = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // axes
    let (x0, x1) = (MARGIN_LEFT, MARGIN_LEFT + plot_w);
    let (y0, y1) = (MARGIN_TOP + plot_h, MARGIN_TOP);
    let _ = writeln!(
        svg,
        r##"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let f = x_hi - t * x_span;
        let v = y_lo + t * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.2}</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"##,
            sx(f),
            y0 + 16.0,
            f,
            x0 - 6.0,
            sy(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">fraction of samples retained</text>
<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(first.metric.as_str())
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = c
            .fractions
            .iter()
            .zip(&c.values)
            .map(|(&f, &v)| format!("{:.2},{:.2}", sx(f), sy(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = x1 + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>
<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(c.rule.as_str())
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_curve_svg(curves: &[RetentionCurve], path: &Path) -> Result<()> {
    let svg = curves_to_svg(curves)?;
    write_atomic(path, |w| Ok(w.write_all(svg.as_bytes())?))
}
