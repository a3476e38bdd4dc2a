//! Static SVG charts from the summary files other subcommands write.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use serde_json::{json, Value};
use triplet_embed::io_util::{read_json, read_to_string, write_atomic};
use triplet_embed::Error;

use crate::manifest::Manifest;
use crate::ReportArgs;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

pub fn run(a: &ReportArgs) -> Result<()> {
    if a.cumulative.is_none() && a.relevance.is_none() {
        return Err(Error::invalid("report needs --cumulative or --relevance").into());
    }
    let mut m = Manifest::start("report");
    if let Some(path) = &a.cumulative {
        m.input("cumulative", path);
        let points = read_curve(path)?;
        let out = a.out.join("cumulative_rsa.svg");
        write_atomic(&out, line_chart("Cumulative RSA", "dimensions", "r²", &points).as_bytes())?;
        m.output(&out);
    }
    if let Some(path) = &a.relevance {
        m.input("relevance", path);
        let report: Value = read_json(path)?;
        for kind in ["signed", "absolute"] {
            let bars = histogram(&report, kind).map_err(|msg| Error::Metadata {
                path: path.clone(),
                msg,
            })?;
            let out = a.out.join(format!("relevance_{kind}.svg"));
            let title = format!("Most relevant dimension by label ({kind})");
            write_atomic(&out, bar_chart(&title, &bars).as_bytes())?;
            m.output(&out);
        }
    }
    let charts = m.outputs.len();
    m.finish(json!({ "charts": charts }));
    Ok(())
}

/// `(k, r²)` pairs from a cumulative RSA TSV.
fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let header: Vec<&str> = lines.next().map(|(_, h)| h.split('\t').collect()).unwrap_or_default();
    let (Some(kc), Some(rc)) = (
        header.iter().position(|&h| h == "k"),
        header.iter().position(|&h| h == "r2"),
    ) else {
        return Err(bad(1, "expected a header with k and r2 columns").into());
    };
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let get = |c: usize| cols.get(c).and_then(|v| v.parse::<f64>().ok());
        match (get(kc), get(rc)) {
            (Some(k), Some(r2)) if r2.is_finite() => out.push((k, r2)),
            _ => return Err(bad(n + 1, "expected numeric k and r2").into()),
        }
    }
    if out.is_empty() {
        return Err(bad(1, "curve has no points").into());
    }
    Ok(out)
}

fn histogram(report: &Value, kind: &str) -> std::result::Result<Vec<(String, f64)>, String> {
    let fractions = report
        .pointer(&format!("/summary/{kind}/fractions"))
        .and_then(Value::as_object)
        .ok_or_else(|| format!("missing summary.{kind}.fractions"))?;
    fractions
        .iter()
        .map(|(label, v)| {
            v.as_f64()
                .map(|f| (label.clone(), f))
                .ok_or_else(|| format!("fraction for {label:?} is not a number"))
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str, body: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    let (x0, y0, x1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0);
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#).unwrap();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = y_pos(t);
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{t}</text>"#,
            x0 - 4.0,
            y + 4.0
        )
        .unwrap();
    }
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

/// Maps a value in `[0, 1]` onto the plot area.
fn y_pos(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    HEIGHT - MARGIN - v * (HEIGHT - 2.0 * MARGIN)
}

fn line_chart(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let (xmin, xmax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let span = (xmax - xmin).max(1.0);
    let x_pos = |x: f64| MARGIN + (x - xmin) / span * (WIDTH - 1.5 * MARGIN);
    let mut body = String::new();
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", x_pos(x), y_pos(y)))
        .collect();
    writeln!(
        body,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        path.join(" ")
    )
    .unwrap();
    for x in [xmin, xmax] {
        writeln!(
            body,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#,
            x_pos(x),
            HEIGHT - MARGIN + 16.0
        )
        .unwrap();
    }
    writeln!(
        body,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(xlabel)
    )
    .unwrap();
    writeln!(
        body,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    )
    .unwrap();
    frame(title, &body)
}

fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let slot = (WIDTH - 1.5 * MARGIN) / bars.len().max(1) as f64;
    let mut body = String::new();
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = MARGIN + i as f64 * slot + slot * 0.15;
        let top = y_pos(*v);
        writeln!(
            body,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="steelblue"/>"#,
            slot * 0.7,
            HEIGHT - MARGIN - top
        )
        .unwrap();
        writeln!(
            body,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            HEIGHT - MARGIN + 16.0,
            escape(label)
        )
        .unwrap();
    }
    frame(title, &body)
}
