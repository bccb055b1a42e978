//! CSV and SVG report files. Column sets are fixed per schema version;
//! numbers use the shortest round-trip decimal form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::conditions::{MomentSeries, WmbReport};
use crate::error::Result;
use crate::montecarlo::DominationVerdict;
use crate::series::SeriesReport;

pub const VERDICT_COLUMNS: &str = "bound,x,y_or_j,empirical,ci,analytic,margin,pass";
pub const SERIES_COLUMNS: &str = "shell,contribution,ci_halfwidth,cumulative";
pub const WMB_COLUMNS: &str = "x,mean_tail,xi_tail,ratio";
pub const MOMENT_COLUMNS: &str = "r,p,value";
pub const MOMENT_SERIES_COLUMNS: &str = "shell,contribution,cumulative";

/// `empirical` and `ci` describe the main-statistic estimate; `analytic`
/// is the closed-form term alone.
pub fn verdicts_csv(verdicts: &[DominationVerdict]) -> String {
    let mut s = format!("{VERDICT_COLUMNS}\n");
    for v in verdicts {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            v.bound, v.x, v.cutoff, v.empirical.p_hat, v.empirical.ci_halfwidth, v.analytic_term, v.margin, v.pass
        )
        .unwrap();
    }
    s
}

pub fn series_csv(report: &SeriesReport) -> String {
    let mut s = format!("{SERIES_COLUMNS}\n");
    let mut cumulative = 0.0;
    for c in &report.per_shell {
        cumulative += c.contribution;
        writeln!(s, "{},{},{},{}", c.shell, c.contribution, c.ci_halfwidth, cumulative).unwrap();
    }
    s
}

pub fn wmb_csv(report: &WmbReport) -> String {
    let mut s = format!("{WMB_COLUMNS}\n");
    for p in &report.probes {
        let ratio = p.ratio.map_or_else(|| "nan".to_string(), |r| r.to_string());
        writeln!(s, "{},{},{},{}", p.x, p.mean_tail, p.xi_tail, ratio).unwrap();
    }
    s
}

pub fn moment_csv(r: f64, p: u32, value: f64) -> String {
    format!("{MOMENT_COLUMNS}\n{r},{p},{value}\n")
}

pub fn moment_series_csv(series: &MomentSeries) -> String {
    let mut s = format!("{MOMENT_SERIES_COLUMNS}\n");
    let mut cumulative = 0.0;
    for &(shell, c) in &series.per_shell {
        cumulative += c;
        writeln!(s, "{shell},{c},{cumulative}").unwrap();
    }
    s
}

/// A named polyline of `(x, y)` points; non-positive `y` are dropped.
pub struct Curve<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Self-contained SVG with a linear x axis and a log10 y axis.
pub fn log_plot_svg(title: &str, x_label: &str, curves: &[Curve<'_>], timestamp: Option<u64>) -> String {
    let positive: Vec<(f64, f64)> =
        curves.iter().flat_map(|c| c.points.iter().copied()).filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    if let Some(t) = timestamp {
        writeln!(s, "<!-- generated at unix time {t} -->").unwrap();
    }
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title))
        .unwrap();
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - 20.0, 40.0);
    writeln!(s, r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    )
    .unwrap();
    if positive.is_empty() {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">no positive values</text>"#,
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0
        )
        .unwrap();
        s.push_str("</svg>\n");
        return s;
    }
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &positive {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        lmin = lmin.min(y.log10().floor());
        lmax = lmax.max(y.log10().ceil());
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if lmax == lmin {
        lmax = lmin + 1.0;
    }
    let px = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    let py = |y: f64| y0 - (y.log10() - lmin) / (lmax - lmin) * (y0 - y1);
    let mut decade = lmin;
    while decade <= lmax {
        let y = py(10f64.powf(decade));
        writeln!(s, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{}</text>"#, x0 - 5.0, y + 4.0, decade).unwrap();
        decade += 1.0;
    }
    writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">{xmin}</text>"#, y0 + 15.0).unwrap();
    writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="middle">{xmax}</text>"#, y0 + 15.0).unwrap();
    for (i, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .points
            .iter()
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, pts.join(" "), c.color)
            .unwrap();
        for p in &pts {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{}"/>"#, c.color).unwrap();
        }
        let ly = y1 + 15.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#, x1 - 150.0, c.color, escape(c.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn series_svg(report: &SeriesReport, timestamp: Option<u64>) -> String {
    let contributions = report.per_shell.iter().map(|c| (c.shell as f64, c.contribution)).collect();
    let upper = report.per_shell.iter().map(|c| (c.shell as f64, c.contribution + c.ci_halfwidth)).collect();
    log_plot_svg(
        "shell contributions",
        "shell (largest coordinate)",
        &[
            Curve { label: "contribution", color: "#1f77b4", points: contributions },
            Curve { label: "contribution + CI", color: "#aec7e8", points: upper },
        ],
        timestamp,
    )
}

pub fn verdicts_svg(verdicts: &[DominationVerdict], timestamp: Option<u64>) -> String {
    let at =
        |f: fn(&DominationVerdict) -> f64| verdicts.iter().enumerate().map(|(i, v)| ((i + 1) as f64, f(v))).collect();
    log_plot_svg(
        "empirical tail vs bound",
        "check",
        &[
            Curve { label: "empirical", color: "#d62728", points: at(|v| v.empirical.p_hat) },
            Curve { label: "bound total", color: "#2ca02c", points: at(|v| v.bound_total) },
        ],
        timestamp,
    )
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
