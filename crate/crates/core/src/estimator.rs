//! Kernel intensity estimation with optional edge correction.
//!
//! ```text
//! λ̂(x; h) = h^{-d} Σ_{y ∈ Ψ ∩ W} κ((x - y)/h) / w_h(x, y)
//! ```
//!
//! `w_h ≡ 1` without correction. The global factor is the window share of the
//! kernel centred at the query point `x`, the local factor the share of the
//! kernel centred at the data point `y`. Local correction preserves mass:
//! the estimate integrates to the number of points.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_bandwidth, Error, Result};
use crate::geometry::{squared_distance, Grid, PointPattern, Window};
use crate::kernels::KernelSpec;

/// Quadrature cells per axis for Beta-kernel edge-correction integrals.
pub const DEFAULT_EDGE_RESOLUTION: usize = 256;

/// Edge factors are floored here before division.
pub const EDGE_WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeCorrection {
    None,
    Global,
    Local,
}

impl fmt::Display for EdgeCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeCorrection::None => "none",
            EdgeCorrection::Global => "global",
            EdgeCorrection::Local => "local",
        })
    }
}

impl FromStr for EdgeCorrection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(EdgeCorrection::None),
            "global" => Ok(EdgeCorrection::Global),
            "local" => Ok(EdgeCorrection::Local),
            _ => Err(Error::Parse(format!(
                "unknown edge correction {s:?}; expected none, global or local"
            ))),
        }
    }
}

/// Kernel, edge-correction mode and the quadrature used for edge factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityEstimator {
    pub kernel: KernelSpec,
    pub correction: EdgeCorrection,
    pub edge_resolution: usize,
}

impl IntensityEstimator {
    pub fn new(kernel: KernelSpec, correction: EdgeCorrection) -> Self {
        IntensityEstimator {
            kernel,
            correction,
            edge_resolution: DEFAULT_EDGE_RESOLUTION,
        }
    }

    pub fn with_edge_resolution(mut self, resolution: usize) -> Self {
        self.edge_resolution = resolution.max(1);
        self
    }

    fn check_dims(&self, window: &Window) -> Result<()> {
        if window.dim() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: window.dim(),
            });
        }
        Ok(())
    }

    /// Window share of the kernel centred at `center`, floored away from zero.
    pub fn window_share(&self, center: &[f64], h: f64, window: &Window) -> f64 {
        self.kernel
            .window_share(center, h, window, self.edge_resolution)
            .max(EDGE_WEIGHT_FLOOR)
    }

    /// Per-point divisors for modes whose factor depends only on the data point:
    /// the local shares, or ones without correction. Global mode gets ones too;
    /// its factor is applied at the query point.
    pub fn data_weights(&self, pattern: &PointPattern, h: f64) -> Vec<f64> {
        match self.correction {
            EdgeCorrection::Local => pattern
                .points()
                .map(|y| self.window_share(y, h, pattern.window()))
                .collect(),
            _ => vec![1.0; pattern.len()],
        }
    }

    fn query_divisor(&self, x: &[f64], h: f64, window: &Window) -> f64 {
        match self.correction {
            EdgeCorrection::Global => self.window_share(x, h, window),
            _ => 1.0,
        }
    }

    /// `h^{-d} Σ_{y, skip} κ((x - y)/h) / weight_y`, without the global divisor.
    fn raw_sum(
        &self,
        x: &[f64],
        h: f64,
        pattern: &PointPattern,
        weights: &[f64],
        skip: Option<usize>,
    ) -> f64 {
        let inv_h2 = 1.0 / (h * h);
        let mut sum = 0.0;
        for (j, y) in pattern.points().enumerate() {
            if Some(j) == skip {
                continue;
            }
            let k = self.kernel.at_squared_norm(squared_distance(x, y) * inv_h2);
            if k > 0.0 {
                sum += k / weights[j];
            }
        }
        sum / h.powi(self.kernel.dim() as i32)
    }

    pub fn estimate_at(&self, x: &[f64], h: f64, pattern: &PointPattern) -> Result<f64> {
        check_bandwidth(h)?;
        self.check_dims(pattern.window())?;
        pattern.window().check_dim(x)?;
        if !pattern.window().contains(x) {
            return Err(Error::PointOutsideWindow(x.to_vec()));
        }
        let weights = self.data_weights(pattern, h);
        Ok(self.raw_sum(x, h, pattern, &weights, None) / self.query_divisor(x, h, pattern.window()))
    }

    /// Estimate at the `index`-th point from the pattern with that point removed.
    pub fn estimate_leave_one_out(
        &self,
        index: usize,
        h: f64,
        pattern: &PointPattern,
    ) -> Result<f64> {
        check_bandwidth(h)?;
        self.check_dims(pattern.window())?;
        if index >= pattern.len() {
            return Err(Error::NotInPattern);
        }
        let x = pattern.point(index);
        let weights = self.data_weights(pattern, h);
        Ok(self.raw_sum(x, h, pattern, &weights, Some(index))
            / self.query_divisor(x, h, pattern.window()))
    }

    /// Leave-one-out estimate at a point given by its coordinates. Removes one
    /// occurrence when the point is duplicated.
    pub fn estimate_leave_one_out_at(
        &self,
        x: &[f64],
        h: f64,
        pattern: &PointPattern,
    ) -> Result<f64> {
        let index = pattern.position(x).ok_or(Error::NotInPattern)?;
        self.estimate_leave_one_out(index, h, pattern)
    }

    /// Evaluates the estimate at every grid node.
    pub fn rasterize(&self, pattern: &PointPattern, h: f64, grid: &Grid) -> Result<IntensityRaster> {
        check_bandwidth(h)?;
        self.check_dims(pattern.window())?;
        if grid.window() != pattern.window() {
            return Err(Error::InvalidWindow(
                "raster grid must cover the pattern window".into(),
            ));
        }
        let weights = self.data_weights(pattern, h);
        let values = if pattern.is_empty() {
            vec![0.0; grid.len()]
        } else if self.kernel.is_gaussian() && self.kernel.dim() == 2 {
            self.rasterize_gaussian_planar(pattern, h, grid, &weights)
        } else {
            let window = pattern.window();
            (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    let x = grid.node(k);
                    self.raw_sum(&x, h, pattern, &weights, None)
                        / self.query_divisor(&x, h, window)
                })
                .collect()
        };
        Ok(IntensityRaster {
            grid: grid.clone(),
            values,
            bandwidth: h,
            kernel: self.kernel,
            correction: self.correction,
        })
    }

    /// The planar Gaussian factorises over axes, so each node reduces to a dot
    /// product of per-axis tables.
    fn rasterize_gaussian_planar(
        &self,
        pattern: &PointPattern,
        h: f64,
        grid: &Grid,
        weights: &[f64],
    ) -> Vec<f64> {
        let n = pattern.len();
        let table = |axis: usize| -> Vec<f64> {
            let mut t = Vec::with_capacity(grid.axis(axis).len() * n);
            for &u in grid.axis(axis) {
                for y in pattern.points() {
                    let z = (u - y[axis]) / h;
                    t.push((-0.5 * z * z).exp());
                }
            }
            t
        };
        let tx = table(0);
        let mut ty = table(1);
        for row in ty.chunks_exact_mut(n) {
            for (v, w) in row.iter_mut().zip(weights) {
                *v /= w;
            }
        }
        let scale = self.kernel.at_origin() / (h * h);
        let nx = grid.resolution()[0];
        let window = pattern.window();
        (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                let a = &tx[i * n..(i + 1) * n];
                let b = &ty[j * n..(j + 1) * n];
                let s: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                let v = scale * s;
                match self.correction {
                    EdgeCorrection::Global => v / self.window_share(&[grid.axis(0)[i], grid.axis(1)[j]], h, window),
                    _ => v,
                }
            })
            .collect()
    }

    fn node_weights(&self, h: f64, grid: &Grid) -> Vec<f64> {
        match self.correction {
            EdgeCorrection::None => vec![1.0; grid.len()],
            _ => (0..grid.len())
                .into_par_iter()
                .map(|k| self.window_share(&grid.node(k), h, grid.window()))
                .collect(),
        }
    }

    /// Expected estimate at `x` by quadrature over `grid`:
    /// `h^{-d} ∫_W κ((x - y)/h) λ(y) / w_h(x, y) dy`.
    pub fn theoretical_mean(
        &self,
        x: &[f64],
        h: f64,
        density: &ProductDensity,
        grid: &Grid,
    ) -> Result<f64> {
        check_bandwidth(h)?;
        self.check_dims(grid.window())?;
        grid.window().check_dim(x)?;
        let node_w = self.node_weights(h, grid);
        let lambda = density.sample(grid);
        Ok(self.mean_with(x, h, grid, &lambda, &node_w))
    }

    fn kernel_row(&self, x: &[f64], h: f64, grid: &Grid) -> Vec<f64> {
        let inv_h2 = 1.0 / (h * h);
        let scale = 1.0 / h.powi(self.kernel.dim() as i32);
        let mut y = vec![0.0; grid.window().dim()];
        (0..grid.len())
            .map(|k| {
                grid.write_node(k, &mut y);
                scale * self.kernel.at_squared_norm(squared_distance(x, &y) * inv_h2)
            })
            .collect()
    }

    /// Per-node divisor for a query at `x`: global uses w(x), local w(y).
    fn divisors<'a>(&self, x: &[f64], h: f64, grid: &Grid, node_w: &'a [f64]) -> Divisor<'a> {
        match self.correction {
            EdgeCorrection::None => Divisor::Constant(1.0),
            EdgeCorrection::Global => Divisor::Constant(self.window_share(x, h, grid.window())),
            EdgeCorrection::Local => Divisor::PerNode(node_w),
        }
    }

    fn mean_with(&self, x: &[f64], h: f64, grid: &Grid, lambda: &[f64], node_w: &[f64]) -> f64 {
        let row = self.kernel_row(x, h, grid);
        let div = self.divisors(x, h, grid, node_w);
        let s: f64 = row
            .iter()
            .enumerate()
            .map(|(k, kv)| kv * lambda[k] / div.at(k))
            .sum();
        s * grid.cell_volume()
    }

    /// Expected squared estimate at `x`: the pair term with `ρ⁽²⁾` plus the
    /// diagonal term with `λ`, both by quadrature over `grid`.
    ///
    /// The pair term is a double sum over nodes unless the density is Poisson,
    /// where it factorises into the squared mean.
    pub fn theoretical_second_moment(
        &self,
        x: &[f64],
        h: f64,
        density: &ProductDensity,
        grid: &Grid,
    ) -> Result<f64> {
        check_bandwidth(h)?;
        self.check_dims(grid.window())?;
        grid.window().check_dim(x)?;
        let node_w = self.node_weights(h, grid);
        let lambda = density.sample(grid);
        Ok(self.second_with(x, h, grid, density, &lambda, &node_w))
    }

    fn second_with(
        &self,
        x: &[f64],
        h: f64,
        grid: &Grid,
        density: &ProductDensity,
        lambda: &[f64],
        node_w: &[f64],
    ) -> f64 {
        let row = self.kernel_row(x, h, grid);
        let div = self.divisors(x, h, grid, node_w);
        let cell = grid.cell_volume();
        let diagonal: f64 = row
            .iter()
            .enumerate()
            .map(|(k, kv)| kv * kv * lambda[k] / (div.at(k) * div.at(k)))
            .sum::<f64>()
            * cell;
        let pair = if density.is_poisson() {
            let m: f64 = row
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * lambda[k] / div.at(k))
                .sum::<f64>()
                * cell;
            m * m
        } else {
            let support: Vec<usize> = (0..grid.len()).filter(|&k| row[k] > 0.0).collect();
            let nodes: Vec<Vec<f64>> = support.iter().map(|&k| grid.node(k)).collect();
            let mut s = 0.0;
            for (a, &ka) in support.iter().enumerate() {
                let fa = row[ka] / div.at(ka);
                for (b, &kb) in support.iter().enumerate() {
                    s += fa * row[kb] / div.at(kb) * density.rho2(&nodes[a], &nodes[b]);
                }
            }
            s * cell * cell
        };
        pair + diagonal
    }

    /// Mean integrated squared error `∫_W Var + bias² dx`, with the outer
    /// integral on the nodes of `grid`.
    pub fn theoretical_mise(&self, h: f64, density: &ProductDensity, grid: &Grid) -> Result<f64> {
        check_bandwidth(h)?;
        self.check_dims(grid.window())?;
        let node_w = self.node_weights(h, grid);
        let lambda = density.sample(grid);
        let per_node: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let x = grid.node(k);
                let m = self.mean_with(&x, h, grid, &lambda, &node_w);
                let s = self.second_with(&x, h, grid, density, &lambda, &node_w);
                let var = (s - m * m).max(0.0);
                let bias = m - lambda[k];
                var + bias * bias
            })
            .collect();
        Ok(grid.integrate_values(&per_node))
    }
}

enum Divisor<'a> {
    Constant(f64),
    PerNode(&'a [f64]),
}

impl Divisor<'_> {
    #[inline]
    fn at(&self, k: usize) -> f64 {
        match self {
            Divisor::Constant(c) => *c,
            Divisor::PerNode(w) => w[k],
        }
    }
}

/// Kernel estimate sampled on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRaster {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: KernelSpec,
    pub correction: EdgeCorrection,
}

impl IntensityRaster {
    /// Midpoint-rule integral of the raster.
    pub fn integrated_mass(&self) -> f64 {
        self.grid.integrate_values(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// First- and second-order moment densities of a point process.
#[derive(Clone)]
pub struct ProductDensity {
    intensity: SpatialFn,
    rho2: Option<PairFn>,
}

impl fmt::Debug for ProductDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProductDensity")
            .field("poisson", &self.rho2.is_none())
            .finish()
    }
}

impl ProductDensity {
    /// Poisson process: `ρ⁽²⁾(x, y) = λ(x) λ(y)`.
    pub fn poisson(intensity: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ProductDensity {
            intensity: Arc::new(intensity),
            rho2: None,
        }
    }

    pub fn new(
        intensity: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        rho2: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ProductDensity {
            intensity: Arc::new(intensity),
            rho2: Some(Arc::new(rho2)),
        }
    }

    pub fn is_poisson(&self) -> bool {
        self.rho2.is_none()
    }

    pub fn intensity(&self, x: &[f64]) -> f64 {
        (self.intensity)(x)
    }

    pub fn rho2(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.rho2 {
            Some(f) => f(x, y),
            None => self.intensity(x) * self.intensity(y),
        }
    }

    pub fn pair_correlation(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rho2(x, y) / (self.intensity(x) * self.intensity(y))
    }

    fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|k| self.intensity(&grid.node(k))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> Window {
        Window::unit(2)
    }

    fn pattern(points: &[[f64; 2]]) -> PointPattern {
        PointPattern::new(unit(), points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_point_box_estimate() {
        let p = pattern(&[[0.5, 0.5]]);
        let est = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::None);
        let v = est.estimate_at(&[0.5, 0.5], 0.1, &p).unwrap();
        assert!((v - 1.0 / (PI * 0.01)).abs() < 1e-9);
        assert!((v - 31.83).abs() < 0.01);
        assert_eq!(est.estimate_at(&[0.65, 0.5], 0.1, &p).unwrap(), 0.0);
        let global = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::Global);
        let g = global.estimate_at(&[0.5, 0.5], 0.1, &p).unwrap();
        assert!((g - v).abs() < 1e-3);
    }

    #[test]
    fn estimate_errors() {
        let p = pattern(&[[0.5, 0.5]]);
        let est = IntensityEstimator::new(KernelSpec::gaussian(2), EdgeCorrection::None);
        assert!(matches!(est.estimate_at(&[0.5, 0.5], 0.0, &p), Err(Error::InvalidBandwidth(_))));
        assert!(matches!(est.estimate_at(&[0.5, 1.5], 0.1, &p), Err(Error::PointOutsideWindow(_))));
        assert!(est.estimate_leave_one_out(3, 0.1, &p).is_err());
        assert!(matches!(
            est.estimate_leave_one_out_at(&[0.1, 0.1], 0.1, &p),
            Err(Error::NotInPattern)
        ));
    }

    #[test]
    fn leave_one_out() {
        let est = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::None);
        let p = pattern(&[[0.5, 0.5], [0.55, 0.5]]);
        let h = 0.1;
        let loo = est.estimate_leave_one_out_at(&[0.5, 0.5], h, &p).unwrap();
        let reduced = est.estimate_at(&[0.5, 0.5], h, &p.without(0)).unwrap();
        assert!((loo - 1.0 / (PI * h * h)).abs() < 1e-9);
        assert_eq!(loo, reduced);
        assert_eq!(est.estimate_leave_one_out(0, 0.04, &p).unwrap(), 0.0);
        let single = pattern(&[[0.3, 0.3]]);
        assert_eq!(est.estimate_leave_one_out(0, h, &single).unwrap(), 0.0);
        // Duplicates: only one occurrence is removed.
        let dup = pattern(&[[0.5, 0.5], [0.5, 0.5]]);
        let v = est.estimate_leave_one_out_at(&[0.5, 0.5], 0.01, &dup).unwrap();
        assert!((v - 1.0 / (PI * 1e-4)).abs() < 1e-6);
    }

    #[test]
    fn zero_beyond_support() {
        let est = IntensityEstimator::new(KernelSpec::beta(1.0, 2).unwrap(), EdgeCorrection::Local);
        let p = pattern(&[[0.2, 0.2], [0.8, 0.8]]);
        assert_eq!(est.estimate_at(&[0.5, 0.5], 0.3, &p).unwrap(), 0.0);
    }

    #[test]
    fn empty_and_constant_rasters() {
        let grid = Grid::uniform(&unit(), 16).unwrap();
        let est = IntensityEstimator::new(KernelSpec::gaussian(2), EdgeCorrection::Local);
        let r = est.rasterize(&PointPattern::empty(unit()), 0.1, &grid).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
        assert_eq!(r.integrated_mass(), 0.0);
        let c = IntensityRaster {
            values: vec![3.5; grid.len()],
            ..r
        };
        assert!((c.integrated_mass() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn local_correction_preserves_mass() {
        let p = pattern(&[
            [0.01, 0.02],
            [0.5, 0.5],
            [0.97, 0.1],
            [0.3, 0.99],
            [0.62, 0.41],
            [0.05, 0.7],
            [0.9, 0.9],
        ]);
        let grid = Grid::uniform(&unit(), 256).unwrap();
        for kernel in [KernelSpec::gaussian(2), KernelSpec::beta(1.0, 2).unwrap()] {
            let est = IntensityEstimator::new(kernel, EdgeCorrection::Local);
            for h in [0.05, 0.1, 0.5] {
                let mass = est.rasterize(&p, h, &grid).unwrap().integrated_mass();
                assert!((mass - 7.0).abs() < 7e-3, "{kernel:?} h={h}: {mass}");
            }
        }
    }

    #[test]
    fn raster_matches_pointwise_estimates() {
        let p = pattern(&[[0.1, 0.2], [0.4, 0.45], [0.8, 0.3], [0.55, 0.9]]);
        let grid = Grid::new(&unit(), &[9, 7]).unwrap();
        for kernel in [KernelSpec::gaussian(2), KernelSpec::box_kernel(2)] {
            for ec in [EdgeCorrection::None, EdgeCorrection::Global, EdgeCorrection::Local] {
                let est = IntensityEstimator::new(kernel, ec);
                let r = est.rasterize(&p, 0.3, &grid).unwrap();
                for k in 0..grid.len() {
                    let v = est.estimate_at(&grid.node(k), 0.3, &p).unwrap();
                    assert!((r.values[k] - v).abs() <= 1e-12 * v.max(1.0), "{ec:?}");
                }
            }
        }
    }

    #[test]
    fn superposition_is_additive_without_global_correction() {
        let a = pattern(&[[0.1, 0.2], [0.4, 0.45]]);
        let b = pattern(&[[0.8, 0.3], [0.55, 0.9], [0.02, 0.03]]);
        let ab = a.superpose(&b).unwrap();
        for ec in [EdgeCorrection::None, EdgeCorrection::Local] {
            let est = IntensityEstimator::new(KernelSpec::gaussian(2), ec);
            for x in [[0.5, 0.5], [0.05, 0.05], [0.9, 0.2]] {
                let sum = est.estimate_at(&x, 0.2, &a).unwrap() + est.estimate_at(&x, 0.2, &b).unwrap();
                let joint = est.estimate_at(&x, 0.2, &ab).unwrap();
                assert!((sum - joint).abs() < 1e-10 * joint);
            }
        }
    }

    #[test]
    fn mean_of_constant_intensity() {
        let grid = Grid::uniform(&unit(), 200).unwrap();
        let pd = ProductDensity::poisson(|_| 50.0);
        let est = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::None);
        let m = est.theoretical_mean(&[0.5, 0.5], 0.1, &pd, &grid).unwrap();
        assert!((m - 50.0).abs() < 0.5);
        // Second moment for Poisson: λ² + λ/(π h²) in the plane.
        let s = est.theoretical_second_moment(&[0.5, 0.5], 0.1, &pd, &grid).unwrap();
        let target = 2500.0 + 50.0 / (PI * 0.01);
        assert!((s - target).abs() < 0.01 * target, "{s} vs {target}");
        assert!(s >= m * m);
        let zero = ProductDensity::poisson(|_| 0.0);
        assert_eq!(est.theoretical_second_moment(&[0.5, 0.5], 0.1, &zero, &grid).unwrap(), 0.0);
    }

    #[test]
    fn mean_of_linear_trend_at_centre() {
        let grid = Grid::uniform(&unit(), 300).unwrap();
        let pd = ProductDensity::poisson(|x| 10.0 + 80.0 * x[0]);
        let est = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::None);
        for x in [[0.3, 0.5], [0.6, 0.4]] {
            let m = est.theoretical_mean(&x, 0.15, &pd, &grid).unwrap();
            let truth = 10.0 + 80.0 * x[0];
            assert!((m - truth).abs() < 0.01 * truth, "{m} vs {truth}");
        }
        let small = IntensityEstimator::new(KernelSpec::gaussian(2), EdgeCorrection::None);
        let fine = Grid::uniform(&unit(), 1000).unwrap();
        let m = small.theoretical_mean(&[0.4, 0.5], 1e-3, &pd, &fine).unwrap();
        assert!((m - 42.0).abs() < 0.42, "{m}");
    }

    #[test]
    fn general_pair_term_agrees_with_poisson_factorisation() {
        let grid = Grid::uniform(&unit(), 24).unwrap();
        let f = |x: &[f64]| 20.0 + 30.0 * x[1];
        let poisson = ProductDensity::poisson(f);
        let explicit = ProductDensity::new(f, move |x, y| f(x) * f(y));
        for ec in [EdgeCorrection::None, EdgeCorrection::Global, EdgeCorrection::Local] {
            let est = IntensityEstimator::new(KernelSpec::gaussian(2), ec);
            let a = est.theoretical_second_moment(&[0.2, 0.7], 0.15, &poisson, &grid).unwrap();
            let b = est.theoretical_second_moment(&[0.2, 0.7], 0.15, &explicit, &grid).unwrap();
            assert!((a - b).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn mise_is_nonnegative_and_variance_dominated_for_constant_intensity() {
        let grid = Grid::uniform(&unit(), 32).unwrap();
        let lambda = 40.0;
        let pd = ProductDensity::poisson(move |_| lambda);
        let est = IntensityEstimator::new(KernelSpec::box_kernel(2), EdgeCorrection::Local);
        let mut previous = f64::INFINITY;
        for h in [0.05, 0.08, 0.12] {
            let mise = est.theoretical_mise(h, &pd, &grid).unwrap();
            assert!(mise >= 0.0);
            let interior_var = lambda / (PI * h * h);
            assert!(mise > 0.8 * interior_var && mise < 1.6 * interior_var, "{mise}");
            assert!(mise < previous);
            previous = mise;
        }
    }

    #[test]
    fn edge_correction_parse() {
        assert_eq!("LOCAL".parse::<EdgeCorrection>().unwrap(), EdgeCorrection::Local);
        assert!("both".parse::<EdgeCorrection>().is_err());
        assert_eq!(EdgeCorrection::Global.to_string(), "global");
    }
}
