//! Deterministic radar (web) charts as self-contained SVG text.
//!
//! One axis per model, one polygon per coefficient series, radial range
//! [-1, 1] with the 0.8 to 1.0 target band shaded. Identical specs yield
//! byte-identical documents so golden-file tests stay exact.

use std::fmt::Write;

use super::ReportError;
use crate::metrics::AlignmentResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 680.0;
const CENTER_X: f64 = 320.0;
const CENTER_Y: f64 = 330.0;
const RADIUS: f64 = 230.0;
const RADIAL_MIN: f64 = -1.0;
const RADIAL_MAX: f64 = 1.0;
const BAND_LOW: f64 = 0.8;
const BAND_HIGH: f64 = 1.0;
const GRID_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const SERIES_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One coefficient series; a `None` value renders as a gap at that spoke.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarSeries {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl RadarSeries {
    pub fn new(name: &str, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.to_string(),
            values,
        }
    }
}

/// A radar chart specification: axes are model names, the four series are
/// the correlation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarSpec {
    pub title: String,
    pub axes: Vec<String>,
    pub series: [RadarSeries; 4],
}

impl RadarSpec {
    pub fn new(
        title: &str,
        axes: Vec<String>,
        series: [RadarSeries; 4],
    ) -> Result<Self, ReportError> {
        if axes.len() < 3 {
            return Err(ReportError::TooFewAxes(axes.len()));
        }
        for s in &series {
            if s.values.len() != axes.len() {
                return Err(ReportError::SeriesLength {
                    name: s.name.clone(),
                    got: s.values.len(),
                    expected: axes.len(),
                });
            }
        }
        Ok(Self {
            title: title.to_string(),
            axes,
            series,
        })
    }

    /// Assembles the chart for one feature from alignment results, one axis
    /// per model in name order.
    pub fn from_results(
        title: &str,
        results: &[&AlignmentResult],
    ) -> Result<Self, ReportError> {
        let mut sorted: Vec<&&AlignmentResult> = results.iter().collect();
        sorted.sort_by(|a, b| a.model.cmp(&b.model));
        let axes: Vec<String> = sorted.iter().map(|r| r.model.clone()).collect();
        let pick = |f: fn(&AlignmentResult) -> Option<f64>| -> Vec<Option<f64>> {
            sorted.iter().map(|r| f(r)).collect()
        };
        let series = [
            RadarSeries::new("Pearson", pick(|r| r.pearson_raw)),
            RadarSeries::new("Pearson (rounded)", pick(|r| r.pearson_rounded)),
            RadarSeries::new("Spearman", pick(|r| r.spearman_raw)),
            RadarSeries::new("Spearman (rounded)", pick(|r| r.spearman_rounded)),
        ];
        Self::new(title, axes, series)
    }
}

fn polar(axis: usize, axis_count: usize, value: f64) -> (f64, f64) {
    let clipped = value.clamp(RADIAL_MIN, RADIAL_MAX);
    let r = RADIUS * (clipped - RADIAL_MIN) / (RADIAL_MAX - RADIAL_MIN);
    let angle = -std::f64::consts::FRAC_PI_2
        + 2.0 * std::f64::consts::PI * axis as f64 / axis_count as f64;
    (CENTER_X + r * angle.cos(), CENTER_Y + r * angle.sin())
}

fn ring_path(axis_count: usize, level: f64) -> String {
    let mut path = String::new();
    for axis in 0..axis_count {
        let (x, y) = polar(axis, axis_count, level);
        let op = if axis == 0 { 'M' } else { 'L' };
        write!(path, "{op}{x:.2},{y:.2} ").unwrap();
    }
    path.push('Z');
    path
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the spec to an SVG document.
pub fn radar_chart(spec: &RadarSpec) -> Result<String, ReportError> {
    let k = spec.axes.len();
    if k < 3 {
        return Err(ReportError::TooFewAxes(k));
    }

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{CENTER_X:.2}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        xml_escape(&spec.title)
    )
    .unwrap();

    // Target band: the 0.8..1.0 annulus drawn as outer ring minus inner
    // ring with the even-odd rule.
    writeln!(
        svg,
        r#"<path d="{} {}" fill="#dff0d8" fill-rule="evenodd" stroke="none"/>"#,
        ring_path(k, BAND_HIGH),
        ring_path(k, BAND_LOW)
    )
    .unwrap();

    // Grid rings and spokes.
    for level in GRID_LEVELS {
        writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="#cccccc" stroke-width="1"/>"#,
            ring_path(k, level)
        )
        .unwrap();
    }
    for axis in 0..k {
        let (x, y) = polar(axis, k, RADIAL_MAX);
        writeln!(
            svg,
            r#"<line x1="{CENTER_X:.2}" y1="{CENTER_Y:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#cccccc" stroke-width="1"/>"#
        )
        .unwrap();
    }

    // Radial tick labels along the first (upward) spoke.
    for level in GRID_LEVELS {
        let r = RADIUS * (level - RADIAL_MIN) / (RADIAL_MAX - RADIAL_MIN);
        let y = CENTER_Y - r;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" fill="#888888" text-anchor="end">{level}</text>"#,
            CENTER_X - 6.0
        )
        .unwrap();
    }

    // Axis labels just outside the outer ring.
    for (axis, label) in spec.axes.iter().enumerate() {
        let angle = -std::f64::consts::FRAC_PI_2
            + 2.0 * std::f64::consts::PI * axis as f64 / k as f64;
        let x = CENTER_X + (RADIUS + 16.0) * angle.cos();
        let y = CENTER_Y + (RADIUS + 16.0) * angle.sin();
        let anchor = if angle.cos().abs() < 0.3 {
            "middle"
        } else if angle.cos() > 0.0 {
            "start"
        } else {
            "end"
        };
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{}</text>"#,
            xml_escape(label)
        )
        .unwrap();
    }

    // Series: polygons where complete, open subpaths across gaps, and a
    // marker at each defined spoke.
    for (i, series) in spec.series.iter().enumerate() {
        let color = SERIES_COLORS[i];
        let mut path = String::new();
        let mut pen_down = false;
        let defined = series.values.iter().filter(|v| v.is_some()).count();
        for (axis, value) in series.values.iter().enumerate() {
            match value {
                Some(v) => {
                    let (x, y) = polar(axis, k, *v);
                    let op = if pen_down { 'L' } else { 'M' };
                    write!(path, "{op}{x:.2},{y:.2} ").unwrap();
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if defined == k {
            path.push('Z');
        }
        if !path.is_empty() {
            writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.trim_end()
            )
            .unwrap();
        }
        for (axis, value) in series.values.iter().enumerate() {
            if let Some(v) = value {
                let (x, y) = polar(axis, k, *v);
                writeln!(
                    svg,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                )
                .unwrap();
            }
        }
    }

    // Legend.
    for (i, series) in spec.series.iter().enumerate() {
        let y = HEIGHT - 80.0 + i as f64 * 18.0;
        writeln!(
            svg,
            r#"<line x1="24" y1="{y:.2}" x2="52" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            SERIES_COLORS[i]
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="58" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            y + 4.0,
            xml_escape(&series.name)
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
