//! Plain-text CSV formats for patterns, rasters, criterion curves and K curves.
//!
//! A pattern file starts with `# window lo_1 hi_1 lo_2 hi_2`, then a header
//! line of axis names, then one point per line. Numbers use the shortest
//! decimal form that reads back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bandwidth::BandwidthSelection;
use crate::error::{Error, Result};
use crate::estimator::IntensityRaster;
use crate::geometry::{PointPattern, Window};
use crate::harness::{format_window, parse_window};

fn axis_names(d: usize) -> Vec<String> {
    match d {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=d).map(|a| format!("x{a}")).collect(),
    }
}

pub fn pattern_to_csv(pattern: &PointPattern) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# window {}", format_window(pattern.window()));
    let _ = writeln!(s, "{}", axis_names(pattern.dim()).join(","));
    for p in pattern.points() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Parses a pattern file. Without a `# window` line, `default_window` is used.
pub fn pattern_from_csv(text: &str, default_window: Option<Window>) -> Result<PointPattern> {
    let mut window = None;
    let mut header_seen = false;
    let mut coords = Vec::new();
    let mut width = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(w) = rest.trim().strip_prefix("window") {
                window = Some(parse_window(w)?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            header_seen = true;
            if fields[0].parse::<f64>().is_err() {
                width = Some(fields.len());
                continue;
            }
        }
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(Error::Parse(format!(
                "line {}: expected {w} fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        for f in fields {
            coords.push(
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {f:?}", lineno + 1)))?,
            );
        }
    }
    let window = window
        .or(default_window)
        .ok_or_else(|| Error::Parse("pattern file has no window line".into()))?;
    if let Some(w) = width {
        if w != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                got: w,
            });
        }
    }
    PointPattern::from_flat(window, coords)
}

pub fn read_pattern(path: &Path, default_window: Option<Window>) -> Result<PointPattern> {
    pattern_from_csv(&fs::read_to_string(path)?, default_window)
}

pub fn write_pattern(path: &Path, pattern: &PointPattern) -> Result<()> {
    Ok(fs::write(path, pattern_to_csv(pattern))?)
}

/// Node coordinates and the estimate: `x,y,intensity`.
pub fn raster_to_csv(raster: &IntensityRaster) -> String {
    let d = raster.grid.window().dim();
    let mut s = axis_names(d).join(",");
    s.push_str(",intensity\n");
    let mut x = vec![0.0; d];
    for (k, v) in raster.values.iter().enumerate() {
        raster.grid.write_node(k, &mut x);
        for c in &x {
            let _ = write!(s, "{c},");
        }
        let _ = writeln!(s, "{v}");
    }
    s
}

/// `h,value` per candidate, then `selected,<h>`.
pub fn selection_to_csv(sel: &BandwidthSelection) -> String {
    let mut s = String::from("h,value\n");
    for (h, v) in &sel.curve {
        let _ = writeln!(s, "{h},{v}");
    }
    let _ = writeln!(s, "selected,{}", sel.selected);
    s
}

/// Reads the selected bandwidth back from [`selection_to_csv`] output.
pub fn selected_from_csv(text: &str) -> Result<f64> {
    text.lines()
        .find_map(|l| l.trim().strip_prefix("selected,"))
        .ok_or_else(|| Error::Parse("no selected line".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("bad selected bandwidth".into()))
}

/// `t,khat`.
pub fn k_curve_to_csv(curve: &[(f64, f64)]) -> String {
    let mut s = String::from("t,khat\n");
    for (t, k) in curve {
        let _ = writeln!(s, "{t},{k}");
    }
    s
}
