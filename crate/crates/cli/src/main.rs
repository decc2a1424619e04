//! `wavediv`: fit wavelet density estimates, estimate divergences with
//! confidence intervals, run the goodness-of-fit test and drive the
//! simulation lab.
//!
//! Exit codes: 0 ok, 2 usage or parse error, 3 domain violation, 4 sample
//! size mismatch, 5 unknown catalog id, 1 anything else.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wavediv::inference::{
    one_sided_f_report, two_sided_report, PipelineOptions, Provenance, DEGENERATE_NULL_WARNING,
};
use wavediv::io::{line_of_value, parse_sample, write_atomic};
use wavediv::quadrature::DEFAULT_NODES;
use wavediv::simulation::{self, Execution, ExperimentConfig};
use wavediv::synthetic::by_id;
use wavediv::{
    fit_density, DivergenceKind, DivergenceSpec, EstimateReport, Error, Family, Interval,
    ScalingFunction, UniformGrid, WaveletDensityEstimate,
};

/// Environment variable holding the worker thread count for `simulate`.
const THREADS_ENV: &str = "WAVEDIV_THREADS";
const TABLE_RESOLUTION: u32 = 12;

#[derive(Parser)]
#[command(name = "wavediv", version, about = "Wavelet density and divergence estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit f_n to a sample and evaluate it on a grid
    Fit(FitArgs),
    /// Estimate a divergence with its confidence interval
    Divergence(DivergenceArgs),
    /// Test H0: f = g against a known catalog density
    GofTest(GofArgs),
    /// Run a Monte Carlo experiment from a JSON config
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Scaling function: haar or db2..db10
    #[arg(long, default_value = "db2")]
    wavelet: Family,
    /// Domain bounds
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    domain: Vec<f64>,
    /// Starting Simpson node count for divergence integrals
    #[arg(long, default_value_t = DEFAULT_NODES)]
    quad_nodes: usize,
    /// Write to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FitArgs {
    /// Sample file, one value per line
    #[arg(long)]
    input: PathBuf,
    /// Number of grid points (endpoints included)
    #[arg(long, default_value_t = 1025)]
    grid: usize,
    /// Scaling function: haar or db2..db10
    #[arg(long, default_value = "db2")]
    wavelet: Family,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    domain: Vec<f64>,
    /// CSV destination; the sidecar goes next to it with a `.json` extension
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Divergence: hellinger, tsallis, renyi, kl or l2
    #[arg(long)]
    kind: DivergenceKind,
    /// Order for hellinger, tsallis and renyi
    #[arg(long)]
    alpha: Option<f64>,
    /// Confidence level of the interval
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
}

#[derive(Args)]
struct DivergenceArgs {
    /// Sample of f
    #[arg(long)]
    input_f: PathBuf,
    /// Sample of g (two-sided estimate)
    #[arg(long, conflicts_with = "known_g", required_unless_present = "known_g")]
    input_g: Option<PathBuf>,
    /// Catalog id of a known g: U, LIN, BUMP or COS
    #[arg(long)]
    known_g: Option<String>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GofArgs {
    /// Sample to test
    #[arg(long)]
    input_f: PathBuf,
    /// Catalog id of the null density: U, LIN, BUMP or COS
    #[arg(long)]
    known_g: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output stem; overrides `output_path` of the config
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `base_seed` of the config
    #[arg(long)]
    seed: Option<u64>,
    /// Run replicates on the calling thread only
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::EmptySample
            | Error::InvalidAlpha(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidConfig { .. }
            | Error::ConfigSchema { .. }
            | Error::UnsupportedFamily(_) => 2,
            Error::OutOfDomainValue { .. } | Error::NonPositiveDensity { .. } | Error::DomainMismatch => 3,
            Error::SampleSizeMismatch { .. } => 4,
            Error::UnknownDensity(_) => 5,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

/// A parsed sample file; keeps the text so errors can name lines.
struct SampleFile {
    path: PathBuf,
    text: String,
    values: Vec<f64>,
}

fn read_sample_file(path: &Path) -> CliResult<SampleFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let values = parse_sample(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })?;
    Ok(SampleFile { path: path.to_path_buf(), text, values })
}

fn domain_of(bounds: &[f64]) -> CliResult<Interval> {
    Ok(Interval::new(bounds[0], bounds[1])?)
}

fn scaling(family: Family) -> CliResult<Arc<ScalingFunction>> {
    Ok(Arc::new(ScalingFunction::build(family, TABLE_RESOLUTION)?))
}

fn fit_file(
    file: &SampleFile,
    scaling: Arc<ScalingFunction>,
    domain: Interval,
) -> CliResult<WaveletDensityEstimate> {
    fit_density(&file.values, scaling, domain, wavediv::density::DEFAULT_CLIP_FLOOR).map_err(|e| match e {
        Error::OutOfDomainValue { index, value, lo, hi } => Failure {
            code: 3,
            message: format!(
                "{} line {}: value {value} lies outside the domain [{lo}, {hi}]",
                file.path.display(),
                line_of_value(&file.text, index).unwrap_or(index + 1)
            ),
        },
        other => other.into(),
    })
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match output {
        Some(path) => write_atomic(path, bytes).map_err(|e| Failure { code: 1, message: e.to_string() }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure { code: 1, message: e.to_string() }),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
    bytes.push(b'\n');
    bytes
}

#[derive(Serialize)]
struct FitSidecar {
    n: usize,
    j_n: u32,
    wavelet: String,
    mass: f64,
    domain: Interval,
    grid_size: usize,
}

#[derive(Serialize)]
struct FitDocument<'a> {
    #[serde(flatten)]
    sidecar: &'a FitSidecar,
    x: Vec<f64>,
    value: Vec<f64>,
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let domain = domain_of(&args.domain)?;
    let grid = UniformGrid::over(domain, args.grid)?;
    let phi = scaling(args.wavelet)?;
    let file = read_sample_file(&args.input)?;
    let est = fit_file(&file, phi, domain)?;
    let xs: Vec<f64> = grid.points().collect();
    let values = est.evaluate_on_grid(&grid)?;
    let sidecar = FitSidecar {
        n: est.n(),
        j_n: est.level(),
        wavelet: args.wavelet.to_string(),
        mass: est.mass(),
        domain,
        grid_size: args.grid,
    };
    match args.format {
        Format::Csv => {
            let mut csv = String::from("x,value\n");
            for (x, v) in xs.iter().zip(&values) {
                csv.push_str(&format!("{x},{v}\n"));
            }
            emit(args.output.as_deref(), csv.as_bytes())?;
            let side = to_json(&sidecar);
            match &args.output {
                Some(path) => emit(Some(&path.with_extension("json")), &side)?,
                None => eprint!("{}", String::from_utf8_lossy(&side)),
            }
        }
        Format::Json => {
            let doc = FitDocument { sidecar: &sidecar, x: xs, value: values };
            emit(args.output.as_deref(), &to_json(&doc))?;
        }
    }
    Ok(())
}

fn spec_of(e: &EstimatorArgs) -> CliResult<DivergenceSpec> {
    if e.kind.needs_alpha() && e.alpha.is_none() {
        return Err(Failure::usage(format!("--alpha is required for {}", e.kind)));
    }
    Ok(DivergenceSpec::new(e.kind, e.alpha)?)
}

fn options(e: &EstimatorArgs, common: &Common, null_value: Option<f64>) -> PipelineOptions {
    PipelineOptions {
        quad_points: common.quad_nodes,
        ci_level: e.ci,
        null_value,
        ..PipelineOptions::default()
    }
}

fn write_report(report: &EstimateReport, common: &Common) -> CliResult<()> {
    let bytes = match common.format {
        Format::Json => to_json(report),
        Format::Csv => {
            let p = report;
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            format!(
                "kind,alpha,estimate,sigma_hat,ci_level,ci_lo,ci_hi,z_stat,p_value,n,j_n,warnings\n\
                 {},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                p.spec.kind,
                opt(p.spec.alpha),
                p.estimate,
                p.sigma_hat,
                p.ci_level,
                p.ci[0],
                p.ci[1],
                opt(p.z_stat),
                opt(p.p_value),
                p.n,
                p.j_n,
                p.warnings.join("; ").replace('"', "'"),
            )
            .into_bytes()
        }
    };
    emit(common.output.as_deref(), &bytes)
}

fn known_report(
    spec: &DivergenceSpec,
    input: &Path,
    known: &str,
    opts: PipelineOptions,
    common: &Common,
    mode: &str,
) -> CliResult<EstimateReport> {
    let g = by_id(known)?;
    let domain = domain_of(&common.domain)?;
    let file = read_sample_file(input)?;
    let est = fit_file(&file, scaling(common.wavelet)?, domain)?;
    let report = one_sided_f_report(spec, &est, &file.values, |x| g.pdf(x), &opts)?;
    Ok(report.with_provenance(Provenance {
        mode: Some(mode.into()),
        wavelet: Some(common.wavelet.to_string()),
        domain: Some(domain),
        quad_points: Some(common.quad_nodes),
        known_density: Some(g.id().into()),
    }))
}

fn cmd_divergence(args: DivergenceArgs) -> CliResult<()> {
    let spec = spec_of(&args.estimator)?;
    let opts = options(&args.estimator, &args.common, None);
    let report = match (&args.known_g, &args.input_g) {
        (Some(known), _) => known_report(&spec, &args.input_f, known, opts, &args.common, "one_sided")?,
        (None, Some(input_g)) => {
            let domain = domain_of(&args.common.domain)?;
            let phi = scaling(args.common.wavelet)?;
            let f_file = read_sample_file(&args.input_f)?;
            let g_file = read_sample_file(input_g)?;
            if f_file.values.len() != g_file.values.len() {
                return Err(Error::SampleSizeMismatch {
                    n_f: f_file.values.len(),
                    n_g: g_file.values.len(),
                }
                .into());
            }
            let f_est = fit_file(&f_file, phi.clone(), domain)?;
            let g_est = fit_file(&g_file, phi, domain)?;
            two_sided_report(&spec, &f_est, &f_file.values, &g_est, &g_file.values, &opts)?
                .with_provenance(Provenance {
                    mode: Some("two_sided".into()),
                    wavelet: Some(args.common.wavelet.to_string()),
                    domain: Some(domain),
                    quad_points: Some(args.common.quad_nodes),
                    known_density: None,
                })
        }
        (None, None) => return Err(Failure::usage("one of --known-g or --input-g is required")),
    };
    write_report(&report, &args.common)
}

fn cmd_gof(args: GofArgs) -> CliResult<()> {
    let spec = spec_of(&args.estimator)?;
    let opts = options(&args.estimator, &args.common, Some(spec.kind.null_value()));
    let mut report = known_report(&spec, &args.input_f, &args.known_g, opts, &args.common, "gof")?;
    report.warnings.push(DEGENERATE_NULL_WARNING.to_string());
    write_report(&report, &args.common)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{THREADS_ENV}={raw} is not a thread count")))?;
        simulation::set_thread_count(threads)?;
    }
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    let stem = match (&args.output, &config.output_path) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Failure::usage("no output path: set `output_path` in the config or pass --output")),
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let result = simulation::run(&config, exec)?;
    let (csv, json) = result
        .write(&stem)
        .map_err(|e| Failure { code: 1, message: e.to_string() })?;
    let summary: Vec<String> = result
        .aggregates
        .per_n
        .iter()
        .map(|a| {
            let mut s = format!(
                "n={} median_a_n={:.4} mean_z={:+.3} var_z={:.3} ks_p={:.3} coverage={:.3}",
                a.n, a.median_a_n, a.mean_z, a.var_z, a.ks_p_value, a.coverage
            );
            if let (Some(power), Some(size)) = (a.rejection_rate, a.null_rejection_rate) {
                s.push_str(&format!(" power={power:.3} size={size:.3}"));
            }
            s
        })
        .collect();
    println!(
        "{:?} J={:.6} rows={} | {} | wrote {} and {}",
        config.experiment,
        result.j_oracle,
        result.rows.len(),
        summary.join(" | "),
        csv.display(),
        json.display()
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Divergence(a) => cmd_divergence(a),
        Command::GofTest(a) => cmd_gof(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
