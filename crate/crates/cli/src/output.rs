//! Plot-ready CSV and minimal SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub yerr: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, yerr: 0.0 }
    }

    pub fn with_err(x: f64, y: f64, yerr: f64) -> Self {
        Self { x, y, yerr }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<Point>) -> Self {
        Self { label: label.into(), points }
    }
}

/// Curves sharing one pair of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl CurveSet {
    pub fn new(name: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { name: name.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }
}

/// A free-form table written verbatim as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// `x,y,yerr,series` rows; header only for an empty set.
pub fn curves_to_csv(set: &CurveSet) -> String {
    let mut s = String::from("x,y,yerr,series\n");
    for series in &set.series {
        for p in &series.points {
            writeln!(s, "{},{},{},{}", p.x, p.y, p.yerr, series.label).expect("write to string");
        }
    }
    s
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static line plot with a framed axis box, end-point tick labels and a
/// legend.
pub fn curves_to_svg(set: &CurveSet) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let finite = set.series.iter().flat_map(|s| &s.points).filter(|p| p.x.is_finite() && p.y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in finite {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y - p.yerr.abs());
        y1 = y1.max(p.y + p.yerr.abs());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * margin, h - 2.0 * margin).unwrap();
    writeln!(s, r#"<text x="{margin}" y="{}" text-anchor="middle">{x0:.4}</text>"#, h - margin + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1:.4}</text>"#, w - margin, h - margin + 16.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.4}</text>"#, margin - 4.0, h - margin).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, margin - 4.0, margin + 4.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 16.0, escape(&set.x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&set.y_label)
    )
    .unwrap();
    for (i, series) in set.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.x.is_finite() && p.y.is_finite())
            .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" ")).unwrap();
        for p in series.points.iter().filter(|p| p.yerr > 0.0 && p.x.is_finite() && p.y.is_finite()) {
            writeln!(
                s,
                r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                px(p.x),
                py(p.y - p.yerr),
                py(p.y + p.yerr)
            )
            .unwrap();
        }
        let ly = margin + 16.0 + 16.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, margin + 8.0, escape(&series.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<name>.csv` (and `<name>.svg` when asked) for every curve set;
/// returns the written paths.
pub fn emit_plot_data(dir: &Path, sets: &[CurveSet], svg: bool) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for set in sets {
        let csv = dir.join(format!("{}.csv", set.name));
        fs::write(&csv, curves_to_csv(set))?;
        written.push(csv);
        if svg {
            let path = dir.join(format!("{}.svg", set.name));
            fs::write(&path, curves_to_svg(set))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn emit_tables(dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv())?;
        written.push(path);
    }
    Ok(written)
}
