//! Isotropic smoothing kernels: the Beta family and the Gaussian.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_bandwidth, Error, Result};
use crate::geometry::{disc_window_area, midpoints, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `(1 - |x|^2)^gamma` on the closed unit ball; `gamma = 0` is the box kernel.
    Beta { gamma: f64 },
    Gaussian,
}

impl KernelFamily {
    pub const BOX: KernelFamily = KernelFamily::Beta { gamma: 0.0 };
    pub const EPANECHNIKOV: KernelFamily = KernelFamily::Beta { gamma: 1.0 };
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelFamily::Gaussian => write!(f, "gaussian"),
            KernelFamily::Beta { gamma: 0.0 } => write!(f, "box"),
            KernelFamily::Beta { gamma: 1.0 } => write!(f, "epanechnikov"),
            KernelFamily::Beta { gamma } => write!(f, "beta:{gamma}"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    /// Accepts `box`, `epanechnikov`, `beta:<gamma>` and `gaussian`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "box" | "uniform" => Ok(KernelFamily::BOX),
            "epanechnikov" => Ok(KernelFamily::EPANECHNIKOV),
            "gaussian" => Ok(KernelFamily::Gaussian),
            other => match other.strip_prefix("beta:") {
                Some(g) => {
                    let gamma: f64 = g
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad beta exponent {g:?}")))?;
                    Ok(KernelFamily::Beta { gamma })
                }
                None => Err(Error::Parse(format!(
                    "unknown kernel {s:?}; expected box, epanechnikov, beta:<gamma> or gaussian"
                ))),
            },
        }
    }
}

/// A kernel family fixed to a dimension, with its normalising constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    norm: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("kernel dimension must be positive".into()));
        }
        let half_d = dim as f64 / 2.0;
        let norm = match family {
            KernelFamily::Gaussian => (2.0 * PI).powf(-half_d),
            KernelFamily::Beta { gamma } => {
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "beta kernel exponent must be nonnegative, got {gamma}"
                    )));
                }
                (ln_gamma(half_d + gamma + 1.0) - ln_gamma(gamma + 1.0) - half_d * PI.ln()).exp()
            }
        };
        Ok(KernelSpec { family, dim, norm })
    }

    pub fn gaussian(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::Gaussian, dim).expect("positive dimension")
    }

    pub fn beta(gamma: f64, dim: usize) -> Result<Self> {
        KernelSpec::new(KernelFamily::Beta { gamma }, dim)
    }

    pub fn box_kernel(dim: usize) -> Self {
        KernelSpec::new(KernelFamily::BOX, dim).expect("positive dimension")
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, KernelFamily::Gaussian)
    }

    pub fn is_box(&self) -> bool {
        matches!(self.family, KernelFamily::Beta { gamma } if gamma == 0.0)
    }

    /// Radius of the support, `None` for unbounded support.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Beta { .. } => Some(1.0),
            KernelFamily::Gaussian => None,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.at_squared_norm(x.iter().map(|v| v * v).sum()))
    }

    /// Kernel value as a function of `|x|^2`.
    #[inline]
    pub fn at_squared_norm(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => self.norm * (-0.5 * r2).exp(),
            KernelFamily::Beta { gamma } => {
                if r2 > 1.0 {
                    0.0
                } else if gamma == 0.0 {
                    self.norm
                } else {
                    self.norm * (1.0 - r2).powf(gamma)
                }
            }
        }
    }

    /// Natural log of the kernel at `|x|^2`; `-inf` off the support.
    #[inline]
    pub fn ln_at_squared_norm(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => self.norm.ln() - 0.5 * r2,
            KernelFamily::Beta { gamma } => {
                if r2 > 1.0 {
                    f64::NEG_INFINITY
                } else if gamma == 0.0 {
                    self.norm.ln()
                } else {
                    self.norm.ln() + gamma * (1.0 - r2).ln()
                }
            }
        }
    }

    /// `kappa(0)`, the maximum of the kernel.
    pub fn at_origin(&self) -> f64 {
        self.norm
    }

    /// `h^{-d} ∫_W kappa((center - u)/h) du`, the share of the scaled kernel
    /// centred at `center` that falls inside `window`.
    ///
    /// Gaussian kernels use the product of normal interval probabilities. The
    /// planar box kernel uses the exact disc/rectangle area. Other Beta kernels
    /// use midpoint quadrature with `resolution` cells per axis over the part of
    /// the support box inside the window. Results are clamped to `[0, 1]`.
    pub fn integrate_over_window(
        &self,
        center: &[f64],
        h: f64,
        window: &Window,
        resolution: usize,
    ) -> Result<f64> {
        check_bandwidth(h)?;
        window.check_dim(center)?;
        if window.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: window.dim(),
            });
        }
        if resolution == 0 {
            return Err(Error::InvalidParameter("quadrature resolution must be positive".into()));
        }
        Ok(self.window_share(center, h, window, resolution))
    }

    pub(crate) fn window_share(
        &self,
        center: &[f64],
        h: f64,
        window: &Window,
        resolution: usize,
    ) -> f64 {
        let lo = window.lower();
        let hi = window.upper();
        match self.family {
            KernelFamily::Gaussian => (0..self.dim)
                .map(|a| normal_interval_mass((lo[a] - center[a]) / h, (hi[a] - center[a]) / h))
                .product::<f64>()
                .clamp(0.0, 1.0),
            KernelFamily::Beta { gamma } => {
                let inside = (0..self.dim).all(|a| center[a] - h >= lo[a] && center[a] + h <= hi[a]);
                if inside {
                    return 1.0;
                }
                if gamma == 0.0 && self.dim == 2 {
                    return (disc_window_area(center, h, window) / (PI * h * h)).clamp(0.0, 1.0);
                }
                self.clipped_ball_quadrature(center, h, window, resolution)
            }
        }
    }

    fn clipped_ball_quadrature(&self, center: &[f64], h: f64, window: &Window, m: usize) -> f64 {
        let d = self.dim;
        let mut axes = Vec::with_capacity(d);
        let mut cell = 1.0;
        for (a, &c) in center.iter().enumerate() {
            let lo = (c - h).max(window.lower()[a]);
            let hi = (c + h).min(window.upper()[a]);
            if hi <= lo {
                return 0.0;
            }
            cell *= (hi - lo) / m as f64;
            // Squared scaled offsets along this axis.
            axes.push(
                midpoints(lo, hi, m)
                    .into_iter()
                    .map(|u| ((u - c) / h).powi(2))
                    .collect::<Vec<_>>(),
            );
        }
        let mut idx = vec![0usize; d];
        let mut sum = 0.0;
        loop {
            let r2: f64 = (0..d).map(|a| axes[a][idx[a]]).sum();
            sum += self.at_squared_norm(r2);
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] < m {
                    break;
                }
                idx[a] = 0;
                a += 1;
                if a == d {
                    return (sum * cell / h.powi(d as i32)).clamp(0.0, 1.0);
                }
            }
        }
    }
}

/// `P(a < Z < b)` for a standard normal `Z`, accurate in both tails.
pub(crate) fn normal_interval_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        0.5 * (erfc(a / SQRT_2) - erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / SQRT_2) - erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(-a / SQRT_2) - 0.5 * erfc(b / SQRT_2)
    }
}
