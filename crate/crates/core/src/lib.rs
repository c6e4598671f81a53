//! Kernel estimation of point-process intensity functions with three
//! data-driven bandwidth selectors, simulators for the benchmark models, and
//! a Monte Carlo harness comparing them.
//!
//! ```
//! use spatial_bandwidth::{select_campbell, BandwidthGrid, EdgeCorrection, KernelSpec, ModelSpec, RngStream, Window};
//!
//! let model = ModelSpec::parse("poisson", "lambda=50", Window::unit(2)).unwrap();
//! let pattern = model.simulator(64).unwrap().simulate(RngStream::new(7, 0)).unwrap();
//! let sel = select_campbell(&pattern, &KernelSpec::gaussian(2), EdgeCorrection::None, &BandwidthGrid::default()).unwrap();
//! assert!(sel.selected > 0.0);
//! ```

// Negated comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod config;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod simulate;
pub mod summaries;

pub use bandwidth::{
    campbell_criterion, campbell_t, diggle_criterion, diggle_mse, ppl_criterion,
    select_campbell, select_campbell_with_background, select_diggle, select_ppl,
    subtract_background, ArgKind, BandwidthGrid, BandwidthSelection, Method,
};
pub use config::KeyValues;
pub use error::{Error, Result};
pub use estimator::{EdgeCorrection, IntensityEstimator, IntensityRaster, ProductDensity};
pub use geometry::{disc_window_area, pairwise_distances, Grid, PairDistance, PointPattern, Window};
pub use harness::{
    emit_per_replicate, emit_table, integrated_squared_error, run_experiment, ExperimentConfig,
    ExperimentResult, MethodSummary, ReplicateRow,
};
pub use kernels::{KernelFamily, KernelSpec};
pub use simulate::{
    sample_gaussian_field, simulate_lgcp, simulate_matern_cluster, simulate_poisson, thin,
    FieldSampler, GaussianField, ModelKind, ModelSpec, RngStream, Simulator, Trend,
};
pub use summaries::{
    estimate_k, estimate_k_upto, k_curve, lens_area, poisson_k, poisson_k_atoms, KCorrection,
    KEstimate,
};
