//! Provenance headers, artifact files and the static SVG plot.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub kind: Kind,
    pub body: String,
}

impl Artifact {
    pub fn csv(name: &str, body: String) -> Self {
        Artifact { name: name.into(), kind: Kind::Csv, body }
    }

    pub fn text(name: &str, body: String) -> Self {
        Artifact { name: name.into(), kind: Kind::Text, body }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let body = serde_json::to_string_pretty(value).context("serialising report")?;
        Ok(Artifact { name: name.into(), kind: Kind::Json, body })
    }
}

/// A named curve for the SVG plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

/// What a command produced: the report printed on stdout, files for --out, an optional plot
/// for --plot and whether any check failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: String,
    pub artifacts: Vec<Artifact>,
    pub plot: Option<Plot>,
    pub failed: bool,
}

pub fn header_lines(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("choquard {VERSION}"),
        format!("command: {}", cfg.command),
        format!("config-sha256: {}", cfg.hash()),
        format!("config: {}", cfg.canonical()),
        format!("tolerances: {}", cfg.tolerances()),
    ]
}

pub fn with_header(cfg: &RunConfig, kind: Kind, body: &str) -> String {
    let lines = header_lines(cfg);
    match kind {
        Kind::Csv | Kind::Text => {
            let mut s = String::new();
            for l in &lines {
                let _ = writeln!(s, "# {l}");
            }
            s.push_str(body);
            if !body.ends_with('\n') {
                s.push('\n');
            }
            s
        }
        Kind::Json => {
            // the provenance object comes first so the file opens with it
            let prov = serde_json::json!({
                "version": VERSION,
                "command": cfg.command,
                "config_sha256": cfg.hash(),
                "config": cfg.canonical(),
                "tolerances": cfg.tolerances(),
            });
            format!(
                "{{\n\"provenance\": {},\n\"report\": {}\n}}\n",
                serde_json::to_string_pretty(&prov).unwrap_or_default(),
                body
            )
        }
    }
}

pub fn write_artifacts(cfg: &RunConfig, dir: &Path, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = with_header(cfg, Kind::Text, &outcome.report);
    std::fs::write(dir.join(format!("{}.txt", cfg.command)), report)?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, with_header(cfg, a.kind, &a.body)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

pub fn render_svg(cfg: &RunConfig, plot: &Plot) -> String {
    const W: f64 = 720.0;
    const H: f64 = 440.0;
    const L: f64 = 80.0;
    const R: f64 = 160.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    let pts: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!plot.log_x || *x > 0.0))
        .map(|(x, y)| (tx(x), y))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) =
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), &(x, y)| {
            (a.min(x), b.max(x), c.min(y), d.max(y))
        });
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let sy = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(s, "<!--");
    for l in header_lines(cfg) {
        let _ = writeln!(s, "  {}", l.replace("--", "- -"));
    }
    let _ = writeln!(s, "-->");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        (W - R + L) / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        s,
        "<rect x=\"{L}\" y=\"{T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - L - R,
        H - T - B
    );
    for t in ticks(x0, x1) {
        let label = if plot.log_x { format!("1e{t}") } else { format!("{t:.3}") };
        let _ = writeln!(s, "<line x1=\"{0:.1}\" y1=\"{1}\" x2=\"{0:.1}\" y2=\"{2}\" stroke=\"#ccc\"/>", sx(t), T, H - B);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", sx(t), H - B + 16.0, label);
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(s, "<line x1=\"{0}\" y1=\"{1:.1}\" x2=\"{2}\" y2=\"{1:.1}\" stroke=\"#ccc\"/>", L, sy(t), W - R);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{:.4}</text>", L - 6.0, sy(t) + 4.0, t);
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (W - R + L) / 2.0,
        H - 16.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>",
        (H - B + T) / 2.0,
        escape(&plot.y_label)
    );
    for (k, series) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!plot.log_x || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(tx(x)), sy(y)))
            .collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        let ly = T + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            W - R + 12.0,
            W - R + 32.0
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", W - R + 38.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
