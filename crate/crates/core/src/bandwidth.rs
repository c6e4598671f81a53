//! Bandwidth selection by grid search: the Campbell criterion, Poisson
//! likelihood cross-validation and Diggle's mean-squared-error criterion.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_bandwidth, Error, Result};
use crate::estimator::{EdgeCorrection, IntensityEstimator, IntensityRaster};
use crate::geometry::{squared_distance, Grid, PointPattern};
use crate::kernels::KernelSpec;
use crate::simulate::simulate_poisson;
use crate::summaries::{estimate_k_upto, lens_area_unchecked, KCorrection, KEstimate};

/// Strictly increasing positive candidate bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    values: Vec<f64>,
}

impl BandwidthGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("bandwidth grid is empty".into()));
        }
        if !values.iter().all(|h| *h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(
                "bandwidths must be positive and finite".into(),
            ));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "bandwidth grid must be strictly increasing".into(),
            ));
        }
        Ok(BandwidthGrid { values })
    }

    /// `count` equally spaced values on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidParameter("bandwidth grid is empty".into())),
            1 if lo == hi => BandwidthGrid::new(vec![lo]),
            1 => Err(Error::InvalidParameter(
                "a one-value grid needs lo == hi".into(),
            )),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                let mut v: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
                v[count - 1] = hi;
                BandwidthGrid::new(v)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

impl Default for BandwidthGrid {
    /// 128 values on `[0.01, 1.5]`.
    fn default() -> Self {
        BandwidthGrid::linspace(0.01, 1.5, 128).expect("default grid is valid")
    }
}

impl FromStr for BandwidthGrid {
    type Err = Error;

    /// `lo:hi:count`, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bandwidth grid {s:?} is not lo:hi:count or a list"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() == 3 {
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let n: usize = parts[2].parse().map_err(|_| bad())?;
            return BandwidthGrid::linspace(lo, hi, n);
        }
        if parts.len() != 1 {
            return Err(bad());
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        BandwidthGrid::new(values)
    }
}

impl fmt::Display for BandwidthGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.values.iter().map(|h| h.to_string()).collect();
        f.write_str(&v.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Campbell,
    Ppl,
    Diggle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Campbell, Method::Diggle, Method::Ppl];

    pub fn argkind(&self) -> ArgKind {
        match self {
            Method::Ppl => ArgKind::Max,
            _ => ArgKind::Min,
        }
    }

    /// Column label used in result tables.
    pub fn table_label(&self) -> &'static str {
        match self {
            Method::Campbell => "New",
            Method::Diggle => "State",
            Method::Ppl => "Likelihood",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Campbell => "campbell",
            Method::Ppl => "ppl",
            Method::Diggle => "diggle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "campbell" | "new" => Ok(Method::Campbell),
            "ppl" | "likelihood" => Ok(Method::Ppl),
            "diggle" | "state" => Ok(Method::Diggle),
            _ => Err(Error::Parse(format!(
                "unknown method {s:?}; expected campbell, ppl or diggle"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArgKind {
    Min,
    Max,
}

/// The selected bandwidth together with the full criterion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSelection {
    pub method: Method,
    pub selected: f64,
    pub curve: Vec<(f64, f64)>,
    pub argkind: ArgKind,
}

impl BandwidthSelection {
    /// Picks the optimum of `values` over `grid`. Ties go to the smaller
    /// bandwidth; NaN and infinities in the wrong direction are inadmissible.
    pub fn from_curve(method: Method, grid: &BandwidthGrid, values: Vec<f64>) -> Result<Self> {
        let argkind = method.argkind();
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in values.iter().enumerate() {
            let admissible = match argkind {
                ArgKind::Min => v.is_finite() || v == f64::NEG_INFINITY,
                ArgKind::Max => v.is_finite() || v == f64::INFINITY,
            };
            if !admissible {
                continue;
            }
            let better = match (best, argkind) {
                (None, _) => true,
                (Some((_, b)), ArgKind::Min) => v < b,
                (Some((_, b)), ArgKind::Max) => v > b,
            };
            if better {
                best = Some((i, v));
            }
        }
        let (i, _) = best.ok_or(Error::NoAdmissibleBandwidth)?;
        Ok(BandwidthSelection {
            method,
            selected: grid.values()[i],
            curve: grid.values().iter().cloned().zip(values).collect(),
            argkind,
        })
    }

    pub fn optimum(&self) -> f64 {
        self.curve
            .iter()
            .find(|(h, _)| *h == self.selected)
            .map(|c| c.1)
            .expect("selected bandwidth lies on the curve")
    }
}

/// Squared interpoint distances, row-major.
struct PairTable {
    n: usize,
    d2: Vec<f64>,
}

impl PairTable {
    fn new(pattern: &PointPattern) -> Self {
        let n = pattern.len();
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = squared_distance(pattern.point(i), pattern.point(j));
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        PairTable { n, d2 }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.d2[i * self.n..(i + 1) * self.n]
    }
}

fn check_kernel(kernel: &KernelSpec, pattern: &PointPattern) -> Result<()> {
    if kernel.dim() != pattern.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: pattern.dim(),
        });
    }
    Ok(())
}

/// Global-mode divisors at the data points; ones otherwise.
fn query_shares(est: &IntensityEstimator, pattern: &PointPattern, h: f64) -> Vec<f64> {
    match est.correction {
        EdgeCorrection::Global => pattern
            .points()
            .map(|x| est.window_share(x, h, pattern.window()))
            .collect(),
        _ => vec![1.0; pattern.len()],
    }
}

fn campbell_t_with(est: &IntensityEstimator, pattern: &PointPattern, pairs: &PairTable, h: f64) -> f64 {
    if pattern.is_empty() {
        return pattern.window().volume();
    }
    let weights = est.data_weights(pattern, h);
    let shares = query_shares(est, pattern, h);
    let inv_h2 = 1.0 / (h * h);
    let scale = h.powi(pattern.dim() as i32);
    let mut total = 0.0;
    for (i, share) in shares.iter().enumerate() {
        let s: f64 = pairs
            .row(i)
            .iter()
            .zip(&weights)
            .map(|(d2, w)| est.kernel.at_squared_norm(d2 * inv_h2) / w)
            .sum();
        let lambda = s / scale / share;
        if !(lambda > 0.0) {
            return f64::INFINITY;
        }
        total += 1.0 / lambda;
    }
    total
}

/// `T(h) = Σ_{x ∈ Ψ} 1 / λ̂(x; h)`, using the full (not leave-one-out)
/// estimate; `ℓ(W)` for an empty pattern, `+∞` if any estimate vanishes.
pub fn campbell_t(h: f64, pattern: &PointPattern, kernel: &KernelSpec, correction: EdgeCorrection) -> Result<f64> {
    check_bandwidth(h)?;
    check_kernel(kernel, pattern)?;
    let est = IntensityEstimator::new(*kernel, correction);
    Ok(campbell_t_with(&est, pattern, &PairTable::new(pattern), h))
}

/// `(T(h) - ℓ(W))²`.
pub fn campbell_criterion(
    h: f64,
    pattern: &PointPattern,
    kernel: &KernelSpec,
    correction: EdgeCorrection,
) -> Result<f64> {
    let t = campbell_t(h, pattern, kernel, correction)?;
    Ok((t - pattern.window().volume()).powi(2))
}

fn campbell_curve(pattern: &PointPattern, est: &IntensityEstimator, grid: &BandwidthGrid) -> Vec<f64> {
    let pairs = PairTable::new(pattern);
    let volume = pattern.window().volume();
    grid.values()
        .par_iter()
        .map(|&h| (campbell_t_with(est, pattern, &pairs, h) - volume).powi(2))
        .collect()
}

/// Minimises the Campbell criterion over `grid`.
pub fn select_campbell(
    pattern: &PointPattern,
    kernel: &KernelSpec,
    correction: EdgeCorrection,
    grid: &BandwidthGrid,
) -> Result<BandwidthSelection> {
    check_kernel(kernel, pattern)?;
    let est = IntensityEstimator::new(*kernel, correction);
    BandwidthSelection::from_curve(Method::Campbell, grid, campbell_curve(pattern, &est, grid))
}

fn ppl_with(
    est: &IntensityEstimator,
    pattern: &PointPattern,
    pairs: &PairTable,
    h: f64,
    qgrid: &Grid,
) -> Result<f64> {
    let n = pairs.n;
    let weights = est.data_weights(pattern, h);
    let shares = query_shares(est, pattern, h);
    let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let ln_scale = pattern.dim() as f64 * h.ln();
    let inv_h2 = 1.0 / (h * h);
    let mut terms = vec![0.0; n];
    let mut log_sum = 0.0;
    for (i, share) in shares.iter().enumerate() {
        let row = pairs.row(i);
        let mut peak = f64::NEG_INFINITY;
        for j in (0..n).filter(|&j| j != i) {
            let v = est.kernel.ln_at_squared_norm(row[j] * inv_h2) - ln_w[j];
            terms[j] = v;
            peak = peak.max(v);
        }
        if peak == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let s: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| (terms[j] - peak).exp())
            .sum();
        log_sum += peak + s.ln() - ln_scale - share.ln();
    }
    let integral = match est.correction {
        EdgeCorrection::Local => n as f64,
        EdgeCorrection::None => pattern
            .points()
            .map(|y| est.kernel.window_share(y, h, pattern.window(), est.edge_resolution))
            .sum(),
        EdgeCorrection::Global => est.rasterize(pattern, h, qgrid)?.integrated_mass(),
    };
    Ok(log_sum - integral)
}

/// Leave-one-out Poisson log likelihood
/// `Σ_x log λ̂_{-x}(x) - ∫_W λ̂`; `-∞` when some leave-one-out estimate is 0.
///
/// Without correction the integral is the sum of the window shares of the
/// kernels at the data points; under local correction it is exactly `n`;
/// under global correction it is a midpoint rule on `qgrid`.
pub fn ppl_criterion(
    h: f64,
    pattern: &PointPattern,
    kernel: &KernelSpec,
    correction: EdgeCorrection,
    qgrid: &Grid,
) -> Result<f64> {
    check_bandwidth(h)?;
    check_ppl_inputs(pattern, kernel, qgrid)?;
    let est = IntensityEstimator::new(*kernel, correction);
    ppl_with(&est, pattern, &PairTable::new(pattern), h, qgrid)
}

fn check_ppl_inputs(pattern: &PointPattern, kernel: &KernelSpec, qgrid: &Grid) -> Result<()> {
    check_kernel(kernel, pattern)?;
    if pattern.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: pattern.len(),
        });
    }
    if qgrid.window() != pattern.window() {
        return Err(Error::InvalidWindow(
            "quadrature grid must cover the pattern window".into(),
        ));
    }
    Ok(())
}

/// Maximises the leave-one-out Poisson likelihood over `bgrid`.
pub fn select_ppl(
    pattern: &PointPattern,
    kernel: &KernelSpec,
    correction: EdgeCorrection,
    bgrid: &BandwidthGrid,
    qgrid: &Grid,
) -> Result<BandwidthSelection> {
    check_ppl_inputs(pattern, kernel, qgrid)?;
    let est = IntensityEstimator::new(*kernel, correction);
    let pairs = PairTable::new(pattern);
    let values = bgrid
        .values()
        .par_iter()
        .map(|&h| ppl_with(&est, pattern, &pairs, h, qgrid))
        .collect::<Result<Vec<f64>>>()?;
    BandwidthSelection::from_curve(Method::Ppl, bgrid, values)
}

/// The bandwidth-dependent part of the box-kernel state-estimation MSE,
///
/// ```text
/// λ̂²/(π²h⁴) ∫_0^{2h} lens(t, h) dK̂(t) + λ̂/(πh²) (1 - 2 λ̂ K̂(h)),
/// ```
///
/// where `lens(t, h)` is the area of two discs of radius `h` at distance `t`.
/// The omitted constant is `ρ⁽²⁾(0)`.
pub fn diggle_criterion(h: f64, k: &KEstimate, lambda_hat: f64) -> Result<f64> {
    check_bandwidth(h)?;
    if !(lambda_hat > 0.0 && lambda_hat.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "intensity estimate must be positive, got {lambda_hat}"
        )));
    }
    let area = PI * h * h;
    let overlap = k.stieltjes(2.0 * h, |t| lens_area_unchecked(t, h));
    Ok(lambda_hat * lambda_hat / (area * area) * overlap
        + lambda_hat / area * (1.0 - 2.0 * lambda_hat * k.k(h)))
}

/// The full MSE: [`diggle_criterion`] plus the pair-density value `rho2_at_zero`
/// (`λ²` for a Poisson process).
pub fn diggle_mse(h: f64, k: &KEstimate, lambda_hat: f64, rho2_at_zero: f64) -> Result<f64> {
    Ok(diggle_criterion(h, k, lambda_hat)? + rho2_at_zero)
}

/// Default range of `K̂`: a quarter of the shortest window side, further
/// capped at `sqrt(1000 / (π λ̂))` for dense patterns.
pub fn default_k_range(pattern: &PointPattern) -> f64 {
    let w = pattern.window();
    let shortest = (0..w.dim()).map(|a| w.side(a)).fold(f64::INFINITY, f64::min);
    let lambda_hat = pattern.len() as f64 / w.volume();
    (0.25 * shortest).min((1000.0 / (PI * lambda_hat)).sqrt())
}

/// Minimises [`diggle_criterion`] with `λ̂ = n/ℓ(W)` and a
/// translation-corrected `K̂` on `[0, t_max]`, where `t_max` defaults to
/// [`default_k_range`]. Candidates with `2h > t_max` need `K̂` beyond its
/// range and are inadmissible.
pub fn select_diggle(
    pattern: &PointPattern,
    bgrid: &BandwidthGrid,
    t_max: Option<f64>,
) -> Result<BandwidthSelection> {
    let t_max = t_max.unwrap_or_else(|| default_k_range(pattern));
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "K-function range must be positive, got {t_max}"
        )));
    }
    let k = estimate_k_upto(pattern, KCorrection::Translation, t_max)?;
    let lambda_hat = k.intensity();
    let values = bgrid
        .values()
        .par_iter()
        .map(|&h| {
            if 2.0 * h > t_max {
                Ok(f64::NAN)
            } else {
                diggle_criterion(h, &k, lambda_hat)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    BandwidthSelection::from_curve(Method::Diggle, bgrid, values)
}

/// Campbell selection stabilised by superposing independent Poisson patterns
/// of a known positive background intensity. Each replicate adds a fresh
/// background pattern; the returned curve is the replicate average.
///
/// `background_max` must bound the background on the window. Estimates built
/// from the selected bandwidth should have the background removed again, see
/// [`subtract_background`].
#[allow(clippy::too_many_arguments)]
pub fn select_campbell_with_background(
    pattern: &PointPattern,
    kernel: &KernelSpec,
    correction: EdgeCorrection,
    grid: &BandwidthGrid,
    background: impl Fn(&[f64]) -> f64,
    background_max: f64,
    rng: &mut impl Rng,
    replicates: usize,
) -> Result<BandwidthSelection> {
    check_kernel(kernel, pattern)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("at least one replicate is required".into()));
    }
    let window = pattern.window();
    let probe = Grid::uniform(window, 16)?;
    let positive = (0..probe.len()).all(|k| background(&probe.node(k)) > 0.0);
    if !positive || !(background_max > 0.0) {
        return Err(Error::InvalidParameter(
            "background intensity must be positive on the window".into(),
        ));
    }
    let est = IntensityEstimator::new(*kernel, correction);
    let mut mean = vec![0.0; grid.len()];
    for _ in 0..replicates {
        let extra = simulate_poisson(&background, window, background_max, rng)?;
        let curve = campbell_curve(&pattern.superpose(&extra)?, &est, grid);
        for (m, v) in mean.iter_mut().zip(curve) {
            *m += v / replicates as f64;
        }
    }
    BandwidthSelection::from_curve(Method::Campbell, grid, mean)
}

/// Removes a known background intensity from a raster node by node.
pub fn subtract_background(raster: &IntensityRaster, background: impl Fn(&[f64]) -> f64) -> IntensityRaster {
    let mut out = raster.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        *v -= background(&raster.grid.node(k));
    }
    out
}
