//! Observation windows, point patterns and midpoint quadrature grids.
//!
//! Windows are open axis-aligned boxes. A [`PointPattern`] only accepts points
//! strictly inside its window. Coordinates are stored flat, `dim` values per
//! point, so patterns of a few thousand points stay cache friendly.

use crate::error::{Error, Result};

/// Open axis-aligned box `(lower_0, upper_0) x ... x (lower_{d-1}, upper_{d-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidWindow("window needs at least one axis".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidWindow(format!(
                    "axis {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Window { lower, upper })
    }

    /// The unit cube `(0,1)^d`.
    pub fn unit(dim: usize) -> Self {
        Window {
            lower: vec![0.0; dim.max(1)],
            upper: vec![1.0; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Lebesgue measure of the window.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    /// Strict (open-window) membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| v > lo && v < hi)
    }

    /// Extends every side by `margin` on both ends.
    pub fn dilate(&self, margin: f64) -> Result<Window> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation margin must be nonnegative, got {margin}"
            )));
        }
        Ok(Window {
            lower: self.lower.iter().map(|v| v - margin).collect(),
            upper: self.upper.iter().map(|v| v + margin).collect(),
        })
    }

    /// Volume of `W ∩ (W + shift)`; zero when the shifted copy misses.
    pub fn overlap_with_shift(&self, shift: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| (self.side(i) - shift[i].abs()).max(0.0))
            .product()
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }
}

/// Finite set of points observed in an open window. Duplicates are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    coords: Vec<f64>,
    window: Window,
}

impl PointPattern {
    pub fn new(window: Window, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * window.dim());
        for p in &points {
            window.check_dim(p)?;
            if !window.contains(p) {
                return Err(Error::PointOutsideWindow(p.clone()));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointPattern { coords, window })
    }

    /// Builds a pattern from flat coordinates, `dim` consecutive values per point.
    pub fn from_flat(window: Window, coords: Vec<f64>) -> Result<Self> {
        let d = window.dim();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {d}",
                coords.len()
            )));
        }
        for p in coords.chunks_exact(d) {
            if !window.contains(p) {
                return Err(Error::PointOutsideWindow(p.to_vec()));
            }
        }
        Ok(PointPattern { coords, window })
    }

    pub fn empty(window: Window) -> Self {
        PointPattern {
            coords: Vec::new(),
            window,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Index of the first point equal to `x`, if any.
    pub fn position(&self, x: &[f64]) -> Option<usize> {
        self.points().position(|p| p == x)
    }

    /// Copy of the pattern with exactly the `i`-th point removed.
    pub fn without(&self, i: usize) -> PointPattern {
        let d = self.dim();
        let mut coords = Vec::with_capacity(self.coords.len().saturating_sub(d));
        coords.extend_from_slice(&self.coords[..i * d]);
        coords.extend_from_slice(&self.coords[(i + 1) * d..]);
        PointPattern {
            coords,
            window: self.window.clone(),
        }
    }

    /// Union of two patterns on the same window (multiset semantics).
    pub fn superpose(&self, other: &PointPattern) -> Result<PointPattern> {
        if self.window != other.window {
            return Err(Error::InvalidWindow(
                "superposed patterns must share a window".into(),
            ));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointPattern {
            coords,
            window: self.window.clone(),
        })
    }

    /// Keeps only the points for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&[f64]) -> bool) -> PointPattern {
        let mut coords = Vec::new();
        for p in self.points() {
            if keep(p) {
                coords.extend_from_slice(p);
            }
        }
        PointPattern {
            coords,
            window: self.window.clone(),
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

/// Euclidean distance of every unordered pair `i < j`, in lexicographic order.
pub fn pairwise_distances(p: &PointPattern) -> Vec<PairDistance> {
    let n = p.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let a = p.point(i);
        for j in i + 1..n {
            out.push(PairDistance {
                i,
                j,
                distance: squared_distance(a, p.point(j)).sqrt(),
            });
        }
    }
    out
}

/// Cell-centre grid over a window; the midpoint quadrature rule.
///
/// Nodes are ordered with the first axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    window: Window,
    resolution: Vec<usize>,
    axes: Vec<Vec<f64>>,
    cell_volume: f64,
}

impl Grid {
    pub fn new(window: &Window, resolution: &[usize]) -> Result<Self> {
        if resolution.len() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                got: resolution.len(),
            });
        }
        if resolution.contains(&0) {
            return Err(Error::InvalidParameter(
                "grid resolution must be at least 1 per axis".into(),
            ));
        }
        let axes: Vec<Vec<f64>> = resolution
            .iter()
            .enumerate()
            .map(|(a, &m)| midpoints(window.lower()[a], window.upper()[a], m))
            .collect();
        let cell_volume = resolution
            .iter()
            .enumerate()
            .map(|(a, &m)| window.side(a) / m as f64)
            .product();
        Ok(Grid {
            window: window.clone(),
            resolution: resolution.to_vec(),
            axes,
            cell_volume,
        })
    }

    /// Grid with the same number of cells along every axis.
    pub fn uniform(window: &Window, per_axis: usize) -> Result<Self> {
        Grid::new(window, &vec![per_axis; window.dim()])
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell centres along one axis.
    pub fn axis(&self, a: usize) -> &[f64] {
        &self.axes[a]
    }

    /// Per-axis indices of node `k`.
    pub fn index(&self, mut k: usize) -> Vec<usize> {
        self.resolution
            .iter()
            .map(|&m| {
                let i = k % m;
                k /= m;
                i
            })
            .collect()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.window.dim()];
        self.write_node(k, &mut out);
        out
    }

    pub(crate) fn write_node(&self, mut k: usize, out: &mut [f64]) {
        for (a, &m) in self.resolution.iter().enumerate() {
            out[a] = self.axes[a][k % m];
            k /= m;
        }
    }

    /// All nodes as flat coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.window.dim();
        let mut out = vec![0.0; self.len() * d];
        for (k, chunk) in out.chunks_exact_mut(d).enumerate() {
            self.write_node(k, chunk);
        }
        out
    }

    /// Midpoint-rule integral of `f` over the window.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut x = vec![0.0; self.window.dim()];
        let mut sum = 0.0;
        for k in 0..self.len() {
            self.write_node(k, &mut x);
            sum += f(&x);
        }
        sum * self.cell_volume
    }

    /// Midpoint-rule integral of node values laid out in node order.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume
    }
}

pub(crate) fn midpoints(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let step = (hi - lo) / m as f64;
    (0..m).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

/// Area of `B(center, r) ∩ W` for a planar window.
pub fn disc_window_area(center: &[f64], r: f64, window: &Window) -> f64 {
    debug_assert_eq!(window.dim(), 2);
    let (cx, cy) = (center[0], center[1]);
    let (x0, x1) = (window.lower()[0] - cx, window.upper()[0] - cx);
    let (y0, y1) = (window.lower()[1] - cy, window.upper()[1] - cy);
    let area = quadrant_area(x1, y1, r) - quadrant_area(x0, y1, r) - quadrant_area(x1, y0, r)
        + quadrant_area(x0, y0, r);
    area.clamp(0.0, std::f64::consts::PI * r * r)
}

/// Area of `B(0, r) ∩ {u <= x, v <= y}`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    let xe = x.min(r);
    if xe <= -r || y <= -r {
        return 0.0;
    }
    // Antiderivative of the half chord s(u) = sqrt(r^2 - u^2).
    let chord = |u: f64| {
        let u = u.clamp(-r, r);
        0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin())
    };
    let int_s = |a: f64, b: f64| {
        let (a, b) = (a.max(-r), b.min(xe));
        if b > a {
            chord(b) - chord(a)
        } else {
            0.0
        }
    };
    let len = |a: f64, b: f64| {
        let (a, b) = (a.max(-r), b.min(xe));
        (b - a).max(0.0)
    };
    if y >= r {
        return 2.0 * int_s(-r, r);
    }
    let q = (r * r - y * y).sqrt();
    if y >= 0.0 {
        // Full chord where s < y, otherwise the chord is cut at height y.
        2.0 * int_s(-r, -q) + int_s(-q, q) + y * len(-q, q) + 2.0 * int_s(q, r)
    } else {
        int_s(-q, q) + y * len(-q, q)
    }
}
