//! Monte Carlo comparison of the bandwidth selectors: simulate, select, smooth
//! with a locally corrected Gaussian kernel, and score by integrated squared
//! error against the model intensity.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bandwidth::{select_campbell, select_diggle, select_ppl, BandwidthGrid, Method};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::estimator::{EdgeCorrection, IntensityEstimator, IntensityRaster};
use crate::geometry::{Grid, PointPattern, Window};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::simulate::{ModelSpec, RngStream, DEFAULT_FIELD_RESOLUTION};

/// Replicates simulated together; batching only shares work, results are
/// per stream.
const SIMULATION_BATCH: usize = 16;

/// Cells per axis of the default evaluation grid.
pub const DEFAULT_EVAL_RESOLUTION: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub replicates: usize,
    pub bandwidth_grid: BandwidthGrid,
    /// Cells per axis of the grid used for the likelihood integral and the ISE.
    pub eval_resolution: usize,
    pub selection_kernel: KernelSpec,
    pub selection_edge: EdgeCorrection,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Cells per axis of the Gaussian field grid (log-Gaussian Cox models).
    pub field_resolution: usize,
    /// Range of the K-function used by Diggle's criterion; `None` uses
    /// the default range rule.
    pub diggle_t_max: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults: 100 replicates, the default bandwidth grid, a 128² grid,
    /// Gaussian selection kernel without edge correction, all methods.
    pub fn new(model: ModelSpec) -> Self {
        let d = model.window.dim();
        ExperimentConfig {
            model,
            replicates: 100,
            bandwidth_grid: BandwidthGrid::default(),
            eval_resolution: DEFAULT_EVAL_RESOLUTION,
            selection_kernel: KernelSpec::gaussian(d),
            selection_edge: EdgeCorrection::None,
            methods: Method::ALL.to_vec(),
            seed: 1,
            field_resolution: DEFAULT_FIELD_RESOLUTION,
            diggle_t_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.eval_resolution == 0 || self.field_resolution == 0 {
            return Err(Error::InvalidParameter("grid resolutions must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no selection method requested".into()));
        }
        if self.selection_kernel.dim() != self.model.window.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.model.window.dim(),
                got: self.selection_kernel.dim(),
            });
        }
        Ok(())
    }

    /// Reads a flat `key = value` configuration. Keys: `model`, `params`,
    /// `window`, `replicates`, `hgrid`, `eval_resolution`, `selection_kernel`,
    /// `selection_edge`, `methods`, `seed`, `field_resolution`,
    /// `diggle_tmax` (a number or `auto`).
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.ensure_known(&[
            "model",
            "params",
            "window",
            "replicates",
            "hgrid",
            "eval_resolution",
            "selection_kernel",
            "selection_edge",
            "methods",
            "seed",
            "field_resolution",
            "diggle_tmax",
        ])?;
        let window = match kv.get("window") {
            Some(w) => parse_window(w)?,
            None => Window::unit(2),
        };
        let model = ModelSpec::parse(kv.require("model")?, kv.get("params").unwrap_or(""), window)?;
        let mut cfg = ExperimentConfig::new(model);
        if let Some(v) = kv.get("replicates") {
            cfg.replicates = parse_value(v, "replicates")?;
        }
        if let Some(v) = kv.get("hgrid") {
            cfg.bandwidth_grid = v.parse()?;
        }
        if let Some(v) = kv.get("eval_resolution") {
            cfg.eval_resolution = parse_value(v, "eval_resolution")?;
        }
        if let Some(v) = kv.get("selection_kernel") {
            let family: KernelFamily = v.parse()?;
            cfg.selection_kernel = KernelSpec::new(family, cfg.model.window.dim())?;
        }
        if let Some(v) = kv.get("selection_edge") {
            cfg.selection_edge = v.parse()?;
        }
        if let Some(v) = kv.get("methods") {
            cfg.methods = v
                .split(',')
                .map(|m| m.parse::<Method>())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = kv.get("seed") {
            cfg.seed = parse_value(v, "seed")?;
        }
        if let Some(v) = kv.get("field_resolution") {
            cfg.field_resolution = parse_value(v, "field_resolution")?;
        }
        if let Some(v) = kv.get("diggle_tmax") {
            cfg.diggle_t_max = match v.trim() {
                "auto" => None,
                t => Some(parse_value(t, "diggle_tmax")?),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every effective setting as configuration text that reads back to `self`.
    pub fn to_config_text(&self) -> String {
        let spec = self.model.to_string();
        let (name, params) = spec.split_once(' ').unwrap_or((&spec, ""));
        let methods: Vec<String> = self.methods.iter().map(|m| m.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "model = {name}");
        let _ = writeln!(s, "params = {params}");
        let _ = writeln!(s, "window = {}", format_window(&self.model.window));
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "hgrid = {}", self.bandwidth_grid);
        let _ = writeln!(s, "eval_resolution = {}", self.eval_resolution);
        let _ = writeln!(s, "selection_kernel = {}", self.selection_kernel.family());
        let _ = writeln!(s, "selection_edge = {}", self.selection_edge);
        let _ = writeln!(s, "methods = {}", methods.join(","));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "field_resolution = {}", self.field_resolution);
        match self.diggle_t_max {
            Some(t) => writeln!(s, "diggle_tmax = {t}"),
            None => writeln!(s, "diggle_tmax = auto"),
        }
        .expect("writing to a string cannot fail");
        s
    }
}

fn parse_value<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {v:?} for {key}")))
}

/// `lo_1 hi_1 lo_2 hi_2 ...`, whitespace or comma separated.
pub fn parse_window(s: &str) -> Result<Window> {
    let v = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| parse_value::<f64>(t, "window"))
        .collect::<Result<Vec<f64>>>()?;
    if v.is_empty() || v.len() % 2 != 0 {
        return Err(Error::Parse(format!("window {s:?} needs lo/hi pairs")));
    }
    let lower = v.iter().step_by(2).cloned().collect();
    let upper = v.iter().skip(1).step_by(2).cloned().collect();
    Window::new(lower, upper)
}

pub fn format_window(w: &Window) -> String {
    (0..w.dim())
        .map(|a| format!("{} {}", w.lower()[a], w.upper()[a]))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub method: Method,
    pub points: usize,
    /// `None` when the selector's preconditions failed.
    pub selected: Option<f64>,
    pub ise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    /// Mean ISE over successful replicates divided by the expected count.
    pub normalized_average_ise: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub expected_count: f64,
    pub rows: Vec<ReplicateRow>,
    pub summaries: Vec<MethodSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Normalized average ISE of `method`, if it ran and succeeded at least once.
    pub fn score(&self, method: Method) -> Option<f64> {
        self.summary(method).and_then(|s| s.normalized_average_ise)
    }

    /// Recomputes the summaries from the rows.
    pub fn aggregate(expected_count: f64, methods: &[Method], rows: Vec<ReplicateRow>) -> Self {
        let summaries = methods
            .iter()
            .map(|&method| {
                let ises: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == method)
                    .filter_map(|r| r.ise)
                    .collect();
                let total = rows.iter().filter(|r| r.method == method).count();
                MethodSummary {
                    method,
                    normalized_average_ise: (!ises.is_empty())
                        .then(|| ises.iter().sum::<f64>() / ises.len() as f64 / expected_count),
                    successes: ises.len(),
                    failures: total - ises.len(),
                }
            })
            .collect();
        ExperimentResult {
            expected_count,
            rows,
            summaries,
        }
    }
}

/// `Σ (value - truth(node))² × cell volume`.
pub fn integrated_squared_error(raster: &IntensityRaster, truth: impl Fn(&[f64]) -> f64) -> f64 {
    let grid = &raster.grid;
    let mut x = vec![0.0; grid.window().dim()];
    let mut sum = 0.0;
    for (k, v) in raster.values.iter().enumerate() {
        grid.write_node(k, &mut x);
        sum += (v - truth(&x)).powi(2);
    }
    sum * grid.cell_volume()
}

fn squared_error_against(raster: &IntensityRaster, truth: &[f64]) -> f64 {
    let s: f64 = raster
        .values
        .iter()
        .zip(truth)
        .map(|(v, t)| (v - t).powi(2))
        .sum();
    s * raster.grid.cell_volume()
}

/// Runs one selector on a pattern.
pub fn select(
    method: Method,
    pattern: &PointPattern,
    cfg: &ExperimentConfig,
    qgrid: &Grid,
) -> Result<f64> {
    let sel = match method {
        Method::Campbell => select_campbell(
            pattern,
            &cfg.selection_kernel,
            cfg.selection_edge,
            &cfg.bandwidth_grid,
        )?,
        Method::Ppl => select_ppl(
            pattern,
            &cfg.selection_kernel,
            cfg.selection_edge,
            &cfg.bandwidth_grid,
            qgrid,
        )?,
        Method::Diggle => select_diggle(pattern, &cfg.bandwidth_grid, cfg.diggle_t_max)?,
    };
    Ok(sel.selected)
}

/// Simulates `cfg.replicates` patterns (stream id = replicate index), selects
/// a bandwidth with each method, and scores the locally corrected Gaussian
/// estimate. Selector failures are recorded per replicate, not raised.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let window = &cfg.model.window;
    let grid = Grid::uniform(window, cfg.eval_resolution)?;
    let truth: Vec<f64> = (0..grid.len())
        .map(|k| cfg.model.true_intensity(&grid.node(k)))
        .collect();
    let simulator = cfg.model.simulator(cfg.field_resolution)?;
    let final_estimator = IntensityEstimator::new(KernelSpec::gaussian(window.dim()), EdgeCorrection::Local);
    let streams: Vec<RngStream> = (0..cfg.replicates as u64)
        .map(|r| RngStream::new(cfg.seed, r))
        .collect();
    let per_replicate = streams
        .par_chunks(SIMULATION_BATCH)
        .enumerate()
        .map(|(c, chunk)| -> Result<Vec<ReplicateRow>> {
            let patterns = simulator.simulate_batch(chunk)?;
            let mut rows = Vec::with_capacity(patterns.len() * cfg.methods.len());
            for (k, pattern) in patterns.iter().enumerate() {
                for &method in &cfg.methods {
                    let (selected, ise) = match select(method, pattern, cfg, &grid) {
                        Ok(h) => {
                            let raster = final_estimator.rasterize(pattern, h, &grid)?;
                            (Some(h), Some(squared_error_against(&raster, &truth)))
                        }
                        Err(_) => (None, None),
                    };
                    rows.push(ReplicateRow {
                        replicate: c * SIMULATION_BATCH + k,
                        method,
                        points: pattern.len(),
                        selected,
                        ise,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = per_replicate.into_iter().flatten().collect();
    Ok(ExperimentResult::aggregate(
        cfg.model.expected_count(),
        &cfg.methods,
        rows,
    ))
}

/// Table with one row per result and the columns `New`, `State`,
/// `Likelihood`; methods that did not run or never succeeded show `NA`.
pub fn emit_table(results: &[ExperimentResult], labels: &[String]) -> String {
    let mut s = String::from("setting");
    for m in Method::ALL {
        s.push(',');
        s.push_str(m.table_label());
    }
    s.push('\n');
    for (i, r) in results.iter().enumerate() {
        let label = labels.get(i).cloned().unwrap_or_else(|| format!("row{}", i + 1));
        s.push_str(&csv_field(&label));
        for m in Method::ALL {
            match r.score(m) {
                Some(v) => {
                    let _ = write!(s, ",{v:.4}");
                }
                None => s.push_str(",NA"),
            }
        }
        s.push('\n');
    }
    s
}

/// `replicate,method,points,selected_h,ise`, with `NA` for failures.
pub fn emit_per_replicate(result: &ExperimentResult) -> String {
    let mut s = String::from("replicate,method,points,selected_h,ise\n");
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    for r in &result.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.replicate,
            r.method,
            r.points,
            na(r.selected),
            na(r.ise)
        );
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
