//! Seeded simulation of Poisson, Matérn cluster and log-Gaussian Cox processes,
//! each paired with its intensity function.

use std::fmt;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch};
use faer::{Mat, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{squared_distance, Grid, PointPattern, Window};

/// Default cells per axis of the grid carrying the Gaussian random field.
pub const DEFAULT_FIELD_RESOLUTION: usize = 64;

const CHOLESKY_JITTER: f64 = 1e-10;
const LGCP_BOUND_FACTOR: f64 = 1.05;

/// A reproducible random stream: ChaCha12 keyed by `seed`, with `stream`
/// selecting one of 2^64 independent sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Deterministic first-order intensity shapes on the plane (functions of the
/// first coordinate only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trend {
    Constant(f64),
    /// `base + slope * x`
    Linear { base: f64, slope: f64 },
    /// `alpha + beta * cos(10 x)`
    Modulated { alpha: f64, beta: f64 },
}

impl Trend {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Trend::Constant(c) => c,
            Trend::Linear { base, slope } => base + slope * x[0],
            Trend::Modulated { alpha, beta } => alpha + beta * (10.0 * x[0]).cos(),
        }
    }

    /// `∫_W trend`.
    pub fn integral(&self, window: &Window) -> f64 {
        let (a, b) = (window.lower()[0], window.upper()[0]);
        let rest = window.volume() / (b - a);
        let along_x = match *self {
            Trend::Constant(c) => c * (b - a),
            Trend::Linear { base, slope } => base * (b - a) + 0.5 * slope * (b * b - a * a),
            Trend::Modulated { alpha, beta } => {
                alpha * (b - a) + beta * ((10.0 * b).sin() - (10.0 * a).sin()) / 10.0
            }
        };
        along_x * rest
    }

    /// An upper bound of the trend on the window.
    pub fn upper_bound(&self, window: &Window) -> f64 {
        let (a, b) = (window.lower()[0], window.upper()[0]);
        match *self {
            Trend::Constant(c) => c,
            Trend::Linear { base, slope } => (base + slope * a).max(base + slope * b),
            Trend::Modulated { alpha, beta } => alpha + beta.abs(),
        }
    }

    /// A lower bound of the trend on the window.
    pub fn lower_bound(&self, window: &Window) -> f64 {
        let (a, b) = (window.lower()[0], window.upper()[0]);
        match *self {
            Trend::Constant(c) => c,
            Trend::Linear { base, slope } => (base + slope * a).min(base + slope * b),
            Trend::Modulated { alpha, beta } => alpha - beta.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Poisson(Trend),
    MaternCluster {
        parent_intensity: f64,
        radius: f64,
        mean_offspring: f64,
    },
    /// Cox process driven by `trend * exp(Z)`, `Z` a centred Gaussian field
    /// with covariance `sigma2 * exp(-beta |x - y|)`.
    Lgcp { trend: Trend, sigma2: f64, beta: f64 },
}

/// A generative model on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub window: Window,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, window: Window) -> Result<Self> {
        let spec = ModelSpec { kind, window };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self.kind {
            ModelKind::Poisson(trend) => {
                if !(trend.lower_bound(&self.window) >= 0.0) {
                    return bad("Poisson intensity must be nonnegative on the window");
                }
            }
            ModelKind::MaternCluster {
                parent_intensity,
                radius,
                mean_offspring,
            } => {
                if !(parent_intensity > 0.0 && radius > 0.0 && mean_offspring > 0.0) {
                    return bad("Matérn parameters must be positive");
                }
            }
            ModelKind::Lgcp {
                trend,
                sigma2,
                beta,
            } => {
                if !(trend.lower_bound(&self.window) > 0.0) {
                    return bad("LGCP trend must be positive on the window");
                }
                if !(sigma2 > 0.0 && beta > 0.0) {
                    return bad("LGCP variance and decay rate must be positive");
                }
                if self.window.dim() != 2 {
                    return bad("LGCP simulation is planar only");
                }
            }
        }
        Ok(())
    }

    /// The deterministic intensity `λ(x)`; for the LGCP this is `E Λ(x)`.
    pub fn true_intensity(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Poisson(trend) => trend.value(x),
            ModelKind::MaternCluster {
                parent_intensity,
                mean_offspring,
                ..
            } => parent_intensity * mean_offspring,
            ModelKind::Lgcp { trend, sigma2, .. } => trend.value(x) * (0.5 * sigma2).exp(),
        }
    }

    /// `∫_W λ`, the expected number of points.
    pub fn expected_count(&self) -> f64 {
        match self.kind {
            ModelKind::Poisson(trend) => trend.integral(&self.window),
            ModelKind::MaternCluster {
                parent_intensity,
                mean_offspring,
                ..
            } => parent_intensity * mean_offspring * self.window.volume(),
            ModelKind::Lgcp { trend, sigma2, .. } => {
                trend.integral(&self.window) * (0.5 * sigma2).exp()
            }
        }
    }

    /// A reusable simulator; for the LGCP this factorises the field covariance.
    pub fn simulator(&self, field_resolution: usize) -> Result<Simulator> {
        let field = match self.kind {
            ModelKind::Lgcp { beta, .. } => {
                let grid = Grid::uniform(&self.window, field_resolution)?;
                Some(FieldSampler::new(grid, beta)?)
            }
            _ => None,
        };
        Ok(Simulator {
            spec: self.clone(),
            field,
        })
    }

    /// Parses a model name and a `key=value,...` parameter pack on `window`.
    ///
    /// | name | keys |
    /// |---|---|
    /// | `poisson` | `lambda` |
    /// | `poisson-linear` | `base` (10), `alpha` |
    /// | `poisson-modulated` | `alpha`, `beta` |
    /// | `matern` | `kappa`, `r`, `mu` |
    /// | `lgcp` | `lambda`, `sigma2`, `beta` |
    /// | `lgcp-linear` | `base` (10), `alpha` (80), `sigma2`, `beta` |
    /// | `lgcp-modulated` | `alpha` (10), `amplitude` (2), `sigma2`, `beta` |
    ///
    /// Values are decimals or `<a>log(<b>)`, e.g. `sigma2=2log(5)`.
    pub fn parse(name: &str, params: &str, window: Window) -> Result<ModelSpec> {
        let pack = ParamPack::parse(params)?;
        let kind = match name.trim().to_ascii_lowercase().as_str() {
            "poisson" => ModelKind::Poisson(Trend::Constant(pack.get("lambda")?)),
            "poisson-linear" => ModelKind::Poisson(Trend::Linear {
                base: pack.get_or("base", 10.0)?,
                slope: pack.get("alpha")?,
            }),
            "poisson-modulated" => ModelKind::Poisson(Trend::Modulated {
                alpha: pack.get("alpha")?,
                beta: pack.get("beta")?,
            }),
            "matern" => ModelKind::MaternCluster {
                parent_intensity: pack.get("kappa")?,
                radius: pack.get("r")?,
                mean_offspring: pack.get("mu")?,
            },
            "lgcp" => ModelKind::Lgcp {
                trend: Trend::Constant(pack.get("lambda")?),
                sigma2: pack.get("sigma2")?,
                beta: pack.get("beta")?,
            },
            "lgcp-linear" => ModelKind::Lgcp {
                trend: Trend::Linear {
                    base: pack.get_or("base", 10.0)?,
                    slope: pack.get_or("alpha", 80.0)?,
                },
                sigma2: pack.get("sigma2")?,
                beta: pack.get("beta")?,
            },
            "lgcp-modulated" => ModelKind::Lgcp {
                trend: Trend::Modulated {
                    alpha: pack.get_or("alpha", 10.0)?,
                    beta: pack.get_or("amplitude", 2.0)?,
                },
                sigma2: pack.get("sigma2")?,
                beta: pack.get("beta")?,
            },
            other => return Err(Error::Parse(format!("unknown model {other:?}"))),
        };
        pack.ensure_all_used()?;
        ModelSpec::new(kind, window)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Poisson(Trend::Constant(l)) => write!(f, "poisson lambda={l}"),
            ModelKind::Poisson(Trend::Linear { base, slope }) => {
                write!(f, "poisson-linear base={base},alpha={slope}")
            }
            ModelKind::Poisson(Trend::Modulated { alpha, beta }) => {
                write!(f, "poisson-modulated alpha={alpha},beta={beta}")
            }
            ModelKind::MaternCluster {
                parent_intensity,
                radius,
                mean_offspring,
            } => write!(f, "matern kappa={parent_intensity},r={radius},mu={mean_offspring}"),
            ModelKind::Lgcp {
                trend,
                sigma2,
                beta,
            } => match trend {
                Trend::Constant(l) => write!(f, "lgcp lambda={l},sigma2={sigma2},beta={beta}"),
                Trend::Linear { base, slope } => write!(
                    f,
                    "lgcp-linear base={base},alpha={slope},sigma2={sigma2},beta={beta}"
                ),
                Trend::Modulated { alpha, beta: amp } => write!(
                    f,
                    "lgcp-modulated alpha={alpha},amplitude={amp},sigma2={sigma2},beta={beta}"
                ),
            },
        }
    }
}

struct ParamPack {
    entries: Vec<(String, f64)>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl ParamPack {
    fn parse(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter {part:?} is not key=value")))?;
            entries.push((k.trim().to_ascii_lowercase(), parse_number(v)?));
        }
        let used = std::cell::RefCell::new(vec![false; entries.len()]);
        Ok(ParamPack { entries, used })
    }

    fn find(&self, key: &str) -> Option<f64> {
        let i = self.entries.iter().position(|(k, _)| k == key)?;
        self.used.borrow_mut()[i] = true;
        Some(self.entries[i].1)
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.find(key)
            .ok_or_else(|| Error::Parse(format!("missing model parameter {key:?}")))
    }

    fn get_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.find(key).unwrap_or(default))
    }

    fn ensure_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some(((k, _), _)) => Err(Error::Parse(format!("unknown model parameter {k:?}"))),
            None => Ok(()),
        }
    }
}

/// Parses a decimal or `<a>log(<b>)` (natural log).
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(open) = s.find("log(") {
        if let Some(inner) = s[open + 4..].strip_suffix(')') {
            let factor = match s[..open].trim() {
                "" => 1.0,
                f => f.trim_end_matches('*').parse::<f64>().map_err(|_| bad_number(s))?,
            };
            let arg: f64 = inner.parse().map_err(|_| bad_number(s))?;
            return Ok(factor * arg.ln());
        }
    }
    s.parse::<f64>().map_err(|_| bad_number(s))
}

fn bad_number(s: &str) -> Error {
    Error::Parse(format!("cannot parse number {s:?}"))
}

fn uniform_in(window: &Window, rng: &mut impl Rng, out: &mut [f64]) {
    // Rejects draws that land on the boundary of the open window.
    loop {
        for (a, v) in out.iter_mut().enumerate() {
            *v = window.lower()[a] + rng.random::<f64>() * window.side(a);
        }
        if window.contains(out) {
            return;
        }
    }
}

fn poisson_count(mean: f64, rng: &mut impl Rng) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Poisson process with intensity `intensity` by thinning a homogeneous
/// process of rate `intensity_max`.
pub fn simulate_poisson(
    intensity: impl Fn(&[f64]) -> f64,
    window: &Window,
    intensity_max: f64,
    rng: &mut impl Rng,
) -> Result<PointPattern> {
    if !(intensity_max >= 0.0 && intensity_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dominating intensity must be finite and nonnegative, got {intensity_max}"
        )));
    }
    let n = poisson_count(intensity_max * window.volume(), rng)?;
    let d = window.dim();
    let mut coords = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        uniform_in(window, rng, &mut x);
        let v = intensity(&x);
        if !(v >= 0.0) || v > intensity_max * (1.0 + 1e-12) {
            return Err(Error::IntensityBoundViolated {
                value: v,
                bound: intensity_max,
            });
        }
        if rng.random::<f64>() * intensity_max < v {
            coords.extend_from_slice(&x);
        }
    }
    PointPattern::from_flat(window.clone(), coords)
}

/// Independent thinning: keeps each point with probability `retention(point)`.
pub fn thin(
    pattern: &PointPattern,
    retention: impl Fn(&[f64]) -> f64,
    rng: &mut impl Rng,
) -> Result<PointPattern> {
    let mut coords = Vec::with_capacity(pattern.coords().len());
    for p in pattern.points() {
        let q = retention(p);
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "retention probability {q} outside [0, 1]"
            )));
        }
        if rng.random::<f64>() < q {
            coords.extend_from_slice(p);
        }
    }
    PointPattern::from_flat(pattern.window().clone(), coords)
}

fn uniform_in_ball(center: &[f64], r: f64, rng: &mut impl Rng, out: &mut [f64]) {
    let d = center.len();
    if d == 2 {
        let rho = r * rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        out[0] = center[0] + rho * theta.cos();
        out[1] = center[1] + rho * theta.sin();
        return;
    }
    loop {
        for v in out.iter_mut() {
            *v = 2.0 * rng.random::<f64>() - 1.0;
        }
        if out.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            break;
        }
    }
    for (v, c) in out.iter_mut().zip(center) {
        *v = c + r * *v;
    }
}

/// Matérn cluster process: Poisson parents on the window dilated by `radius`,
/// each with a Poisson(`mean_offspring`) family uniform in its ball.
pub fn simulate_matern_cluster(
    parent_intensity: f64,
    radius: f64,
    mean_offspring: f64,
    window: &Window,
    rng: &mut impl Rng,
) -> Result<PointPattern> {
    if !(parent_intensity > 0.0 && radius > 0.0 && mean_offspring > 0.0) {
        return Err(Error::InvalidParameter(
            "Matérn parameters must be positive".into(),
        ));
    }
    let parent_window = window.dilate(radius)?;
    let parents = simulate_poisson(|_| parent_intensity, &parent_window, parent_intensity, rng)?;
    let d = window.dim();
    let mut coords = Vec::new();
    let mut x = vec![0.0; d];
    for parent in parents.points() {
        for _ in 0..poisson_count(mean_offspring, rng)? {
            uniform_in_ball(parent, radius, rng, &mut x);
            if window.contains(&x) {
                coords.extend_from_slice(&x);
            }
        }
    }
    PointPattern::from_flat(window.clone(), coords)
}

/// Realisation of a centred Gaussian field on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub sigma2: f64,
    pub beta: f64,
}

impl GaussianField {
    /// Bilinear interpolation of the node values (planar grids).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        bilinear(&self.grid, &self.values, x)
    }
}

/// Bilinear interpolation of cell-centre values, constant beyond the outer
/// centres.
fn bilinear(grid: &Grid, values: &[f64], x: &[f64]) -> f64 {
    let locate = |a: usize| -> (usize, usize, f64) {
        let m = grid.resolution()[a];
        if m == 1 {
            return (0, 0, 0.0);
        }
        let step = grid.window().side(a) / m as f64;
        let p = (x[a] - grid.window().lower()[a]) / step - 0.5;
        let i0 = (p.floor().max(0.0) as usize).min(m - 2);
        let t = (p - i0 as f64).clamp(0.0, 1.0);
        (i0, i0 + 1, t)
    };
    let (i0, i1, tx) = locate(0);
    let (j0, j1, ty) = locate(1);
    let nx = grid.resolution()[0];
    let v = |i: usize, j: usize| values[i + nx * j];
    (1.0 - ty) * ((1.0 - tx) * v(i0, j0) + tx * v(i1, j0)) + ty * ((1.0 - tx) * v(i0, j1) + tx * v(i1, j1))
}

/// Cholesky factor of the exponential correlation `exp(-beta |x - y|)` over
/// grid nodes, reused across draws.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: Grid,
    beta: f64,
    /// Row-major packed lower triangle.
    lower: Vec<f64>,
}

impl FieldSampler {
    pub fn new(grid: Grid, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "covariance decay rate must be positive, got {beta}"
            )));
        }
        let n = grid.len();
        let nodes = grid.nodes();
        let d = grid.window().dim();
        let node = |k: usize| &nodes[k * d..(k + 1) * d];
        let mut a = Mat::<f64>::from_fn(n, n, |i, j| {
            let c = (-beta * squared_distance(node(i), node(j)).sqrt()).exp();
            if i == j {
                c + CHOLESKY_JITTER
            } else {
                c
            }
        });
        let mut mem = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
        cholesky_in_place(
            a.as_mut(),
            Default::default(),
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|_| Error::NotPositiveDefinite)?;
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(a[(i, j)]);
            }
        }
        Ok(FieldSampler { grid, beta, lower })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sample(&self, sigma2: f64, rng: &mut impl Rng) -> Result<GaussianField> {
        Ok(self
            .sample_batch(sigma2, std::slice::from_mut(rng))?
            .pop()
            .expect("one field per generator"))
    }

    /// One field per generator, sharing a single pass over the factor. Each
    /// field equals what [`FieldSampler::sample`] draws from that generator.
    pub fn sample_batch<R: Rng>(&self, sigma2: f64, rngs: &mut [R]) -> Result<Vec<GaussianField>> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field variance must be positive, got {sigma2}"
            )));
        }
        let n = self.grid.len();
        let b = rngs.len();
        // Node-major: the draws of all generators for node j are contiguous.
        let mut z = vec![0.0; n * b];
        for (k, rng) in rngs.iter_mut().enumerate() {
            for j in 0..n {
                z[j * b + k] = rng.sample(StandardNormal);
            }
        }
        let mut acc = vec![0.0; n * b];
        let mut offset = 0;
        for i in 0..n {
            let row = &self.lower[offset..offset + i + 1];
            offset += i + 1;
            let out = &mut acc[i * b..(i + 1) * b];
            for (j, l) in row.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(&z[j * b..(j + 1) * b]) {
                    *o += l * v;
                }
            }
        }
        let sigma = sigma2.sqrt();
        Ok((0..b)
            .map(|k| GaussianField {
                grid: self.grid.clone(),
                values: (0..n).map(|i| sigma * acc[i * b + k]).collect(),
                sigma2,
                beta: self.beta,
            })
            .collect())
    }
}

/// Samples a centred Gaussian field with covariance `sigma2 * exp(-beta |x - y|)`
/// on the nodes of `grid`.
pub fn sample_gaussian_field(
    sigma2: f64,
    beta: f64,
    grid: &Grid,
    rng: &mut impl Rng,
) -> Result<GaussianField> {
    FieldSampler::new(grid.clone(), beta)?.sample(sigma2, rng)
}

fn lgcp_from_field(
    trend: Trend,
    field: &GaussianField,
    window: &Window,
    rng: &mut impl Rng,
) -> Result<PointPattern> {
    // Interpolating exp(Z) rather than Z keeps E Λ(x) = trend(x) exp(σ²/2) between nodes.
    let lifted: Vec<f64> = field.values.iter().map(|z| z.exp()).collect();
    let peak = lifted.iter().cloned().fold(0.0, f64::max);
    let bound = LGCP_BOUND_FACTOR * peak * trend.upper_bound(window);
    let grid = &field.grid;
    simulate_poisson(
        |x| trend.value(x) * bilinear(grid, &lifted, x),
        window,
        bound,
        rng,
    )
}

/// Log-Gaussian Cox process with random intensity `trend(x) exp(Z(x))`.
pub fn simulate_lgcp(
    trend: Trend,
    sigma2: f64,
    beta: f64,
    window: &Window,
    field_grid: &Grid,
    rng: &mut impl Rng,
) -> Result<PointPattern> {
    if window.dim() != 2 || field_grid.window() != window {
        return Err(Error::InvalidWindow(
            "LGCP needs a planar window covered by the field grid".into(),
        ));
    }
    if !(trend.lower_bound(window) > 0.0) {
        return Err(Error::InvalidParameter("LGCP trend must be positive".into()));
    }
    let field = sample_gaussian_field(sigma2, beta, field_grid, rng)?;
    lgcp_from_field(trend, &field, window, rng)
}

/// Model plus any precomputed state needed to draw replicates cheaply.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ModelSpec,
    field: Option<FieldSampler>,
}

impl Simulator {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn simulate(&self, stream: RngStream) -> Result<PointPattern> {
        let mut rng = stream.rng();
        self.simulate_with(&mut rng)
    }

    /// One pattern per stream; equal to calling [`Simulator::simulate`] on
    /// each, but LGCP fields share one pass over the covariance factor.
    pub fn simulate_batch(&self, streams: &[RngStream]) -> Result<Vec<PointPattern>> {
        let mut rngs: Vec<ChaCha12Rng> = streams.iter().map(RngStream::rng).collect();
        match (self.spec.kind, &self.field) {
            (ModelKind::Lgcp { trend, sigma2, .. }, Some(sampler)) => {
                let fields = sampler.sample_batch(sigma2, &mut rngs)?;
                fields
                    .iter()
                    .zip(rngs.iter_mut())
                    .map(|(f, rng)| lgcp_from_field(trend, f, &self.spec.window, rng))
                    .collect()
            }
            _ => rngs.iter_mut().map(|rng| self.simulate_with(rng)).collect(),
        }
    }

    pub fn simulate_with(&self, rng: &mut impl Rng) -> Result<PointPattern> {
        let w = &self.spec.window;
        match self.spec.kind {
            ModelKind::Poisson(trend) => {
                simulate_poisson(|x| trend.value(x), w, trend.upper_bound(w), rng)
            }
            ModelKind::MaternCluster {
                parent_intensity,
                radius,
                mean_offspring,
            } => simulate_matern_cluster(parent_intensity, radius, mean_offspring, w, rng),
            ModelKind::Lgcp { trend, sigma2, .. } => {
                let sampler = self.field.as_ref().expect("LGCP simulator carries a field");
                let field = sampler.sample(sigma2, rng)?;
                lgcp_from_field(trend, &field, w, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Window {
        Window::unit(2)
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 1).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 1).rng(), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 2).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn intensities_and_counts() {
        let m = ModelSpec::new(
            ModelKind::Poisson(Trend::Modulated { alpha: 50.0, beta: 20.0 }),
            unit(),
        )
        .unwrap();
        assert_eq!(m.true_intensity(&[0.0, 0.3]), 70.0);
        let m = ModelSpec::parse("matern", "kappa=20,r=0.05,mu=10", unit()).unwrap();
        assert_eq!(m.true_intensity(&[0.2, 0.2]), 200.0);
        assert_eq!(m.expected_count(), 200.0);
        let m = ModelSpec::parse("lgcp-linear", "sigma2=2log(2),beta=10", unit()).unwrap();
        assert!((m.true_intensity(&[0.5, 0.1]) - 100.0).abs() < 1e-12);
        let m = ModelSpec::parse("poisson-linear", "alpha=480", unit()).unwrap();
        assert!((m.expected_count() - 250.0).abs() < 1e-12);
        let m = ModelSpec::parse("lgcp-modulated", "sigma2=2log(5),beta=10", unit()).unwrap();
        assert!((m.expected_count() - (10.0 + 10f64.sin() / 5.0) * 5.0).abs() < 1e-12);
        let m = ModelSpec::parse("poisson", "lambda=250", unit()).unwrap();
        assert_eq!(m.expected_count(), 250.0);
        let m = ModelSpec::parse("poisson-modulated", "alpha=10,beta=2", unit()).unwrap();
        assert!((m.expected_count() - 9.891195).abs() < 1e-6);
    }

    #[test]
    fn parse_errors() {
        assert!(ModelSpec::parse("matern", "kappa=10,r=0.1", unit()).is_err());
        assert!(ModelSpec::parse("matern", "kappa=10,r=0.1,mu=3,zeta=1", unit()).is_err());
        assert!(ModelSpec::parse("strauss", "beta=1", unit()).is_err());
        assert!(ModelSpec::parse("lgcp", "lambda=10,sigma2=-1,beta=10", unit()).is_err());
        assert!(ModelSpec::parse("poisson", "lambda", unit()).is_err());
        assert!((parse_number("2log(5)").unwrap() - 2.0 * 5f64.ln()).abs() < 1e-15);
        assert!((parse_number("log(2)").unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(parse_number("two").is_err());
    }

    #[test]
    fn display_round_trips_through_parse() {
        for (name, params) in [
            ("poisson", "lambda=50"),
            ("poisson-linear", "base=10,alpha=80"),
            ("matern", "kappa=10,r=0.1,mu=3"),
            ("lgcp-modulated", "alpha=10,amplitude=2,sigma2=1.5,beta=50"),
        ] {
            let m = ModelSpec::parse(name, params, unit()).unwrap();
            let text = m.to_string();
            let (n, p) = text.split_once(' ').unwrap();
            assert_eq!(ModelSpec::parse(n, p, unit()).unwrap(), m);
        }
    }

    #[test]
    fn thinning_extremes() {
        let mut rng = RngStream::new(3, 0).rng();
        let p = simulate_poisson(|_| 100.0, &unit(), 100.0, &mut rng).unwrap();
        assert_eq!(thin(&p, |_| 1.0, &mut rng).unwrap(), p);
        assert!(thin(&p, |_| 0.0, &mut rng).unwrap().is_empty());
        assert!(thin(&p, |_| 1.5, &mut rng).is_err());
    }

    #[test]
    fn poisson_bound_is_enforced() {
        let mut rng = RngStream::new(3, 0).rng();
        let r = simulate_poisson(|x| 10.0 + 80.0 * x[0], &unit(), 20.0, &mut rng);
        assert!(matches!(r, Err(Error::IntensityBoundViolated { .. })));
        assert!(simulate_poisson(|_| 1.0, &unit(), -1.0, &mut rng).is_err());
        assert!(simulate_poisson(|_| 0.0, &unit(), 0.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn simulations_are_deterministic() {
        for (name, params) in [
            ("poisson", "lambda=50"),
            ("matern", "kappa=10,r=0.1,mu=3"),
            ("lgcp", "lambda=10,sigma2=2log(2),beta=10"),
        ] {
            let sim = ModelSpec::parse(name, params, unit())
                .unwrap()
                .simulator(16)
                .unwrap();
            let a = sim.simulate(RngStream::new(42, 5)).unwrap();
            let b = sim.simulate(RngStream::new(42, 5)).unwrap();
            let c = sim.simulate(RngStream::new(42, 6)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn batches_match_single_draws() {
        for (name, params) in [("lgcp", "lambda=20,sigma2=1,beta=10"), ("matern", "kappa=10,r=0.1,mu=3")] {
            let sim = ModelSpec::parse(name, params, unit()).unwrap().simulator(8).unwrap();
            let streams: Vec<RngStream> = (0..5).map(|i| RngStream::new(11, i)).collect();
            let batch = sim.simulate_batch(&streams).unwrap();
            for (s, p) in streams.iter().zip(&batch) {
                assert_eq!(&sim.simulate(*s).unwrap(), p);
            }
        }
    }

    #[test]
    fn tiny_offspring_mean_gives_empty_patterns() {
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..20 {
            let p = simulate_matern_cluster(10.0, 0.1, 1e-9, &unit(), &mut rng).unwrap();
            assert!(p.is_empty());
        }
    }

    #[test]
    fn bilinear_reproduces_affine_fields() {
        let grid = Grid::new(&unit(), &[5, 4]).unwrap();
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let x = grid.node(k);
                1.0 + 2.0 * x[0] - 3.0 * x[1]
            })
            .collect();
        for x in [[0.3, 0.4], [0.5, 0.5], [0.77, 0.2]] {
            let v = bilinear(&grid, &values, &x);
            assert!((v - (1.0 + 2.0 * x[0] - 3.0 * x[1])).abs() < 1e-12);
        }
        // Constant continuation beyond the outer cell centres.
        let edge = bilinear(&grid, &values, &[0.01, 0.5]);
        let centre = bilinear(&grid, &values, &[0.1, 0.5]);
        assert!((edge - centre).abs() < 1e-12);
    }

    #[test]
    fn sampler_rejects_bad_parameters() {
        let grid = Grid::uniform(&unit(), 4).unwrap();
        assert!(FieldSampler::new(grid.clone(), 0.0).is_err());
        let s = FieldSampler::new(grid, 5.0).unwrap();
        assert!(s.sample(0.0, &mut RngStream::new(0, 0).rng()).is_err());
    }
}
