//! Ripley's K-function and Stieltjes sums against its estimate.
//!
//! The estimate is a step function: `K̂(t) = Σ_{d_ij ≤ t} weight_ij / λ̂²`,
//! with one atom per unordered pair carrying the weight of both orderings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{squared_distance, PointPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KCorrection {
    None,
    /// Ohser–Stoyan translation weights `ℓ(W) / ℓ(W ∩ (W - (x_i - x_j)))`.
    #[default]
    Translation,
}

impl fmt::Display for KCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KCorrection::None => "none",
            KCorrection::Translation => "translation",
        })
    }
}

impl FromStr for KCorrection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(KCorrection::None),
            "translation" => Ok(KCorrection::Translation),
            _ => Err(Error::Parse(format!(
                "unknown K correction {s:?}; expected none or translation"
            ))),
        }
    }
}

/// Atomic estimate of the K-function.
#[derive(Debug, Clone, PartialEq)]
pub struct KEstimate {
    distances: Vec<f64>,
    weights: Vec<f64>,
    /// Running sums of `weights`, aligned with `distances`.
    cumulative: Vec<f64>,
    intensity: f64,
}

impl KEstimate {
    /// Builds an estimate from atoms; `weights` are in units of `λ̂² dK`.
    pub fn from_atoms(distances: Vec<f64>, weights: Vec<f64>, intensity: f64) -> Result<Self> {
        if distances.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "atoms need one weight per distance".into(),
            ));
        }
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "intensity estimate must be positive, got {intensity}"
            )));
        }
        let mut atoms: Vec<(f64, f64)> = distances.into_iter().zip(weights).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (distances, weights): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(KEstimate {
            distances,
            weights,
            cumulative,
            intensity,
        })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `λ̂ = n / ℓ(W)`.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Number of atoms with distance at most `t`.
    fn count_upto(&self, t: f64) -> usize {
        self.distances.partition_point(|&d| d <= t)
    }

    /// `K̂(t)`.
    pub fn k(&self, t: f64) -> f64 {
        match self.count_upto(t) {
            0 => 0.0,
            m => self.cumulative[m - 1] / (self.intensity * self.intensity),
        }
    }

    /// `∫_0^{t_max} f(t) dK̂(t)`.
    pub fn stieltjes(&self, t_max: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let m = self.count_upto(t_max);
        let s: f64 = self.distances[..m]
            .iter()
            .zip(&self.weights[..m])
            .map(|(&d, &w)| f(d) * w)
            .sum();
        s / (self.intensity * self.intensity)
    }
}

/// Estimates the K-function from all pairs of `pattern`, with `λ̂ = n / ℓ(W)`.
pub fn estimate_k(pattern: &PointPattern, correction: KCorrection) -> Result<KEstimate> {
    estimate_k_upto(pattern, correction, f64::INFINITY)
}

/// As [`estimate_k`], keeping only atoms at distance at most `t_max`.
pub fn estimate_k_upto(
    pattern: &PointPattern,
    correction: KCorrection,
    t_max: f64,
) -> Result<KEstimate> {
    let n = pattern.len();
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: n,
        });
    }
    let window = pattern.window();
    let area = window.volume();
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    let mut weights = Vec::with_capacity(n * (n - 1) / 2);
    let mut shift = vec![0.0; pattern.dim()];
    for i in 0..n {
        let a = pattern.point(i);
        for j in i + 1..n {
            let b = pattern.point(j);
            let d = squared_distance(a, b).sqrt();
            if d > t_max {
                continue;
            }
            let w = match correction {
                KCorrection::None => 1.0 / area,
                KCorrection::Translation => {
                    for (s, (x, y)) in shift.iter_mut().zip(a.iter().zip(b)) {
                        *s = x - y;
                    }
                    1.0 / window.overlap_with_shift(&shift)
                }
            };
            distances.push(d);
            weights.push(2.0 * w);
        }
    }
    KEstimate::from_atoms(distances, weights, n as f64 / area)
}

/// Area of `B(z, h) ∩ B(0, h)` for `|z| = t`, `0 ≤ t ≤ 2h`.
pub fn lens_area(t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    if !(0.0..=2.0 * h).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "lens distance {t} outside [0, {}]",
            2.0 * h
        )));
    }
    Ok(lens_area_unchecked(t, h))
}

#[inline]
pub(crate) fn lens_area_unchecked(t: f64, h: f64) -> f64 {
    let u = (t / (2.0 * h)).clamp(0.0, 1.0);
    (2.0 * h * h * u.acos() - 0.5 * t * (4.0 * h * h - t * t).max(0.0).sqrt()).max(0.0)
}

/// `K̂` on `points` equally spaced values in `[0, t_max]`.
pub fn k_curve(estimate: &KEstimate, t_max: f64, points: usize) -> Vec<(f64, f64)> {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| {
            let t = t_max * i as f64 / steps as f64;
            (t, estimate.k(t))
        })
        .collect()
}

/// Poisson reference value `K(t) = π t²` in the plane.
pub fn poisson_k(t: f64) -> f64 {
    PI * t * t
}

/// Discretises the planar Poisson `K` on `[0, t_max]` into `cells` atoms at
/// cell midpoints, each carrying the exact increment of `π t²` over its
/// cell. `K̂` is therefore exact at every cell boundary.
pub fn poisson_k_atoms(intensity: f64, t_max: f64, cells: usize) -> Result<KEstimate> {
    if !(t_max > 0.0 && t_max.is_finite()) || cells == 0 {
        return Err(Error::InvalidParameter(
            "atomisation needs a positive range and at least one cell".into(),
        ));
    }
    let step = t_max / cells as f64;
    let lam2 = intensity * intensity;
    let (distances, weights) = (0..cells)
        .map(|k| {
            let (a, b) = (k as f64 * step, (k + 1) as f64 * step);
            (0.5 * (a + b), lam2 * (poisson_k(b) - poisson_k(a)))
        })
        .unzip();
    KEstimate::from_atoms(distances, weights, intensity)
}
