//! `spatial-bandwidth` command-line tool.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spatial_bandwidth::harness::parse_window;
use spatial_bandwidth::io::{
    k_curve_to_csv, pattern_to_csv, raster_to_csv, read_pattern, selection_to_csv,
};
use spatial_bandwidth::{
    emit_per_replicate, emit_table, estimate_k_upto, k_curve, run_experiment, select_campbell,
    select_diggle, select_ppl, BandwidthGrid, EdgeCorrection, ExperimentConfig, Grid,
    IntensityEstimator, KCorrection, KernelFamily, KernelSpec, KeyValues, Method, ModelKind,
    ModelSpec, ProductDensity, RngStream, Window,
};

#[derive(Parser)]
#[command(name = "spatial-bandwidth", version, about = "Kernel intensity estimation and bandwidth selection for point patterns")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one replicate of a model and write the pattern CSV.
    Simulate(SimulateArgs),
    /// Rasterize a kernel estimate of a pattern.
    Estimate(EstimateArgs),
    /// Select a bandwidth and write the criterion curve.
    Select(SelectArgs),
    /// Summary statistics of a pattern.
    Summaries {
        #[command(subcommand)]
        which: SummaryCommand,
    },
    /// Theoretical moments of the estimator for a Poisson model.
    Moments(MomentsArgs),
    /// Run a Monte Carlo comparison described by a config file.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// poisson, poisson-linear, poisson-modulated, matern, lgcp, lgcp-linear, lgcp-modulated
    #[arg(long)]
    model: String,
    /// Comma-separated key=value pairs, e.g. kappa=10,r=0.1,mu=3
    #[arg(long, default_value = "")]
    params: String,
    /// Window as lo/hi pairs per axis
    #[arg(long, default_value = "0 1 0 1")]
    window: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replicate index, used as the random stream id
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Cells per axis of the Gaussian field grid
    #[arg(long, default_value_t = 64)]
    field_resolution: usize,
    /// Output file (standard output if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    /// gaussian, box, epanechnikov or beta:<gamma>
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// none, global or local
    #[arg(long, default_value = "none")]
    edge: String,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    bandwidth: f64,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Cells per axis of the output grid
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    pattern: PathBuf,
    /// campbell, ppl or diggle
    #[arg(long)]
    method: String,
    #[command(flatten)]
    kernel: KernelArgs,
    /// lo:hi:count or a comma-separated list
    #[arg(long, default_value = "0.01:1.5:128")]
    hgrid: String,
    /// Cells per axis of the likelihood quadrature grid
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    /// K-function range for the diggle method (default: range rule)
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SummaryCommand {
    /// Ripley's K-function
    K {
        #[arg(long)]
        pattern: PathBuf,
        /// none or translation
        #[arg(long, default_value = "translation")]
        correction: String,
        #[arg(long, default_value_t = 0.25)]
        tmax: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    bandwidth: f64,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Query location, comma separated
    #[arg(long, default_value = "0.5,0.5")]
    at: String,
    /// Cells per axis of the quadrature grid
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    /// Also report the MISE (costly on fine grids)
    #[arg(long)]
    mise: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<spatial_bandwidth::Error> for Failure {
    fn from(e: spatial_bandwidth::Error) -> Self {
        match e {
            spatial_bandwidth::Error::Parse(m) => Failure::Usage(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn usage(e: spatial_bandwidth::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Select(a) => select(a),
        Command::Summaries { which } => summaries(which),
        Command::Moments(a) => moments(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn model_spec(a: &ModelArgs) -> Result<ModelSpec, Failure> {
    let window = parse_window(&a.window).map_err(usage)?;
    ModelSpec::parse(&a.model, &a.params, window).map_err(usage)
}

fn estimator(a: &KernelArgs, dim: usize) -> Result<IntensityEstimator, Failure> {
    let family: KernelFamily = a.kernel.parse().map_err(usage)?;
    let kernel = KernelSpec::new(family, dim).map_err(usage)?;
    let edge: EdgeCorrection = a.edge.parse().map_err(usage)?;
    Ok(IntensityEstimator::new(kernel, edge))
}

fn load(path: &Path) -> Result<spatial_bandwidth::PointPattern, Failure> {
    read_pattern(path, Some(Window::unit(2))).map_err(|e| match e {
        spatial_bandwidth::Error::Io(m) => Failure::Runtime(format!("{}: {m}", path.display())),
        other => Failure::Runtime(format!("{}: {other}", path.display())),
    })
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let spec = model_spec(&a.model)?;
    let pattern = spec
        .simulator(a.field_resolution)?
        .simulate(RngStream::new(a.seed, a.replicate))?;
    emit(a.out.as_deref(), &pattern_to_csv(&pattern))
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let pattern = load(&a.pattern)?;
    let est = estimator(&a.kernel, pattern.dim())?;
    let grid = Grid::uniform(pattern.window(), a.resolution).map_err(usage)?;
    let raster = est.rasterize(&pattern, a.bandwidth, &grid)?;
    emit(a.out.as_deref(), &raster_to_csv(&raster))
}

fn select(a: SelectArgs) -> Result<(), Failure> {
    let method: Method = a.method.parse().map_err(usage)?;
    let bgrid: BandwidthGrid = a.hgrid.parse().map_err(usage)?;
    let pattern = load(&a.pattern)?;
    let est = estimator(&a.kernel, pattern.dim())?;
    let sel = match method {
        Method::Campbell => select_campbell(&pattern, &est.kernel, est.correction, &bgrid)?,
        Method::Ppl => {
            let q = Grid::uniform(pattern.window(), a.resolution).map_err(usage)?;
            select_ppl(&pattern, &est.kernel, est.correction, &bgrid, &q)?
        }
        Method::Diggle => select_diggle(&pattern, &bgrid, a.tmax)?,
    };
    emit(a.out.as_deref(), &selection_to_csv(&sel))
}

fn summaries(which: SummaryCommand) -> Result<(), Failure> {
    match which {
        SummaryCommand::K {
            pattern,
            correction,
            tmax,
            points,
            out,
        } => {
            let corr: KCorrection = correction.parse().map_err(usage)?;
            if !(tmax > 0.0 && tmax.is_finite()) {
                return Err(Failure::Usage("--tmax must be positive".into()));
            }
            let p = load(&pattern)?;
            let k = estimate_k_upto(&p, corr, tmax)?;
            emit(out.as_deref(), &k_curve_to_csv(&k_curve(&k, tmax, points)))
        }
    }
}

fn moments(a: MomentsArgs) -> Result<(), Failure> {
    let spec = model_spec(&a.model)?;
    let trend = match spec.kind {
        ModelKind::Poisson(t) => t,
        _ => {
            return Err(Failure::Usage(
                "moments needs a Poisson model; other models have no closed-form pair density".into(),
            ))
        }
    };
    let x: Vec<f64> = a
        .at
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("bad location {:?}", a.at)))?;
    let est = estimator(&a.kernel, spec.window.dim())?;
    let grid = Grid::uniform(&spec.window, a.resolution).map_err(usage)?;
    let density = ProductDensity::poisson(move |y| trend.value(y));
    let mean = est.theoretical_mean(&x, a.bandwidth, &density, &grid)?;
    let second = est.theoretical_second_moment(&x, a.bandwidth, &density, &grid)?;
    let mut text = format!(
        "quantity,value\nmean,{mean}\nsecond_moment,{second}\nvariance,{}\n",
        (second - mean * mean).max(0.0)
    );
    if a.mise {
        let mise = est.theoretical_mise(a.bandwidth, &density, &grid)?;
        text.push_str(&format!("mise,{mise}\n"));
    }
    emit(None, &text)
}

fn benchmark(a: BenchmarkArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.config).map_err(|e| io_failure(&a.config, e))?;
    let cfg = ExperimentConfig::from_key_values(&KeyValues::parse(&text).map_err(usage)?).map_err(usage)?;
    fs::create_dir_all(&a.out).map_err(|e| io_failure(&a.out, e))?;
    fs::write(a.out.join("config_echo.cfg"), cfg.to_config_text())
        .map_err(|e| io_failure(&a.out, e))?;
    let result = run_experiment(&cfg)?;
    fs::write(a.out.join("per_replicate.csv"), emit_per_replicate(&result))
        .map_err(|e| io_failure(&a.out, e))?;
    let label = cfg.model.to_string();
    let table = emit_table(std::slice::from_ref(&result), &[label]);
    fs::write(a.out.join("table.csv"), &table).map_err(|e| io_failure(&a.out, e))?;
    for s in &result.summaries {
        eprintln!(
            "{}: successes {}, failures {}",
            s.method, s.successes, s.failures
        );
    }
    emit(None, &table)
}
