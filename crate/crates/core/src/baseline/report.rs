use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::driver::IterationReport;
use crate::error::{param, EisError, Result};
use crate::scalar::Real;

pub const REPORT_COLUMNS: [&str; 12] = [
    "l", "H", "m", "h", "K", "N", "n_l", "samples", "sup_err", "mean_err", "max_kl", "wall_ms",
];

fn opt<T: Real>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the reports as CSV; missing errors are empty fields.
pub fn write_reports<T: Real, W: Write>(reports: &[IterationReport<T>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.iteration.to_string(),
            r.depth.to_string(),
            r.simulations.to_string(),
            r.h.to_string(),
            r.k.to_string(),
            r.cells.to_string(),
            r.states.to_string(),
            r.samples.to_string(),
            opt(r.sup_err),
            opt(r.mean_err),
            opt(r.max_kl),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_reports<T: Real>(reports: &[IterationReport<T>], path: impl AsRef<Path>) -> Result<()> {
    write_reports(reports, std::fs::File::create(path)?)
}

fn field<F: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<F> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| param(format!("bad value in column {}", REPORT_COLUMNS[i])))
}

fn opt_field<F: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<F>> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i).map(Some),
    }
}

/// Parses CSV written by [`write_reports`].
pub fn parse_reports<T: Real + FromStr>(text: &str) -> Result<Vec<IterationReport<T>>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(REPORT_COLUMNS) {
        return Err(param("unexpected report header"));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(IterationReport {
                iteration: field(&rec, 0)?,
                depth: field(&rec, 1)?,
                simulations: field(&rec, 2)?,
                h: field(&rec, 3)?,
                k: field(&rec, 4)?,
                cells: field(&rec, 5)?,
                states: field(&rec, 6)?,
                samples: field(&rec, 7)?,
                sup_err: opt_field(&rec, 8)?,
                mean_err: opt_field(&rec, 9)?,
                max_kl: opt_field(&rec, 10)?,
                wall_ms: field(&rec, 11)?,
            })
        })
        .collect()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 40.0;

/// Pixel mapping of the plot area: iteration and error to SVG coordinates.
#[derive(Clone, Copy, Debug)]
pub struct PlotFrame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl PlotFrame {
    pub fn x(&self, l: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1.0);
        LEFT + (l - self.x_min) / span * (WIDTH - LEFT - RIGHT)
    }

    pub fn y(&self, e: f64) -> f64 {
        TOP + (1.0 - e / self.y_max) * (HEIGHT - TOP - BOTTOM)
    }
}

fn series<T: Real>(reports: &[IterationReport<T>], pick: fn(&IterationReport<T>) -> Option<T>) -> Vec<(f64, f64)> {
    reports
        .iter()
        .filter_map(|r| pick(r).map(|e| (r.iteration as f64, e.as_f64())))
        .collect()
}

/// Line plot of the mean and sup value error against the iteration.
pub fn render_svg<T: Real>(reports: &[IterationReport<T>]) -> Result<String> {
    let mean = series(reports, |r| r.mean_err);
    let sup = series(reports, |r| r.sup_err);
    if mean.is_empty() && sup.is_empty() {
        return Err(param("no error values to plot"));
    }
    let all = mean.iter().chain(&sup);
    let x_min = all.clone().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = all.clone().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let top = all.map(|p| p.1).fold(0.0, f64::max);
    let frame = PlotFrame {
        x_min,
        x_max,
        y_max: if top > 0.0 { top } else { 1.0 },
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let (x0, y0) = (LEFT, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} L{x0} {y0} L{} {y0}" fill="none" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    for i in 0..=4 {
        let v = frame.y_max * i as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            v
        );
    }
    let first = x_min as i64;
    let last = x_max as i64;
    let stride = ((last - first) / 10).max(1);
    let mut l = first;
    while l <= last {
        let x = frame.x(l as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{l}</text>"#,
            y0 + 4.0,
            y0 + 16.0
        );
        l += stride;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 6.0
    );
    for (name, pts, color) in [("mean", &mean, "#1f77b4"), ("max", &sup, "#d62728")] {
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(l, e)| format!("{},{}", frame.x(l), frame.y(e)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">mean error</text><text x=\"{}\" y=\"{}\" fill=\"#d62728\">max error</text>",
        WIDTH - 180.0,
        TOP + 12.0,
        WIDTH - 90.0,
        TOP + 12.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_error_curves<T: Real>(reports: &[IterationReport<T>], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(reports)?).map_err(EisError::from)
}
