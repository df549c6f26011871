//! `pricetool`: evaluate Gaussian pairings, covariance derivatives of
//! expectations, identity verification reports, and the clipping study from
//! the command line.
//!
//! Every run echoes its fully resolved configuration (defaults filled in,
//! seed included) into the output, so a result file is a reproducible
//! record: the same configuration and seed produce byte-identical output.
//! Errors print a single line `error[CODE]: text` and exit with status 3;
//! a `verify` run that reaches a `Mismatch` verdict exits with status 2.

pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use price_core::{
    default_verify_tol, f_tau_curve, fd_derivative, mcmahon_derivative, omega_unpack, pair,
    pair_mc, parse_nonlinearity, price_derivative, verify, CovMatrix, CovMultiindex, Error,
    Estimate, GaussianModel, GeneralizedFunction, QuadratureSpec, Scheme, SymMatrix, Verdict,
};

#[derive(Parser)]
#[command(
    name = "pricetool",
    version,
    about = "Gaussian expectations of nonlinear functions and their covariance derivatives"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate the pairing <g, phi_Sigma> by quadrature (or Monte Carlo)
    Pair(PairArgs),
    /// Covariance-coordinate derivative of the pairing via stored weak derivatives
    Price(PriceArgs),
    /// Compare the derivative against finite differences and report a verdict
    Verify(VerifyArgs),
    /// Derivatives along the 2-d correlation family [[1, a], [a, 1]]
    Mcmahon(McmahonArgs),
    /// Clipping correlator curve with second derivative and chord-bound columns
    #[command(name = "clip-study")]
    ClipStudy(ClipStudyArgs),
    /// Dump deterministic correlated Gaussian draws
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SchemeOpt {
    /// Whitened coordinates: Gauss-Hermite plus cell splitting
    Gh,
    /// Original coordinates: rectangle-restricted Gauss-Legendre
    Rect,
}

impl SchemeOpt {
    fn to_core(self) -> Scheme {
        match self {
            SchemeOpt::Gh => Scheme::GaussHermiteWhitened,
            SchemeOpt::Rect => Scheme::RectangleRestricted,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SchemeOpt::Gh => "gauss-hermite-whitened",
            SchemeOpt::Rect => "rectangle-restricted",
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum FormatOpt {
    Json,
    Csv,
}

#[derive(Args)]
pub struct QuadOpts {
    /// Quadrature order per axis (default: 60 up to n = 2, 30 at n = 3)
    #[arg(long)]
    pub order: Option<usize>,
    /// Integration scheme
    #[arg(long, value_enum, default_value = "gh")]
    pub scheme: SchemeOpt,
}

impl QuadOpts {
    fn resolve(&self, n: usize) -> Result<QuadratureSpec, CliError> {
        let order = self
            .order
            .unwrap_or_else(|| QuadratureSpec::default_for_dim(n).order_per_axis());
        Ok(QuadratureSpec::new(order, self.scheme.to_core())?)
    }
}

#[derive(Args)]
pub struct OutOpts {
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (default: json, except clip-study and sample: csv)
    #[arg(long, value_enum)]
    pub format: Option<FormatOpt>,
}

#[derive(Args)]
pub struct PairArgs {
    /// Nonlinearity, e.g. "clip(tau=1.0)⊗clip(tau=1.0)" or "mono(2,1)"
    #[arg(long)]
    pub g: String,
    /// Covariance: "inline:<json rows>" or a path to a JSON file
    #[arg(long)]
    pub cov: String,
    /// Estimate by Monte Carlo with this many samples instead of quadrature
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    #[command(flatten)]
    pub quad: QuadOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub cov: String,
    /// Derivative multiindex over covariance coordinates: "i,j:k;..." (1-based, i <= j)
    #[arg(long)]
    pub beta: String,
    /// Fall back to finite differences of the pairing when the catalog does
    /// not carry the weak derivative
    #[arg(long)]
    pub fallback_fd: bool,
    /// Base step for the finite-difference fallback
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[command(flatten)]
    pub quad: QuadOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub cov: String,
    /// Derivative multiindex over covariance coordinates: "i,j:k;..." (1-based, i <= j)
    #[arg(long)]
    pub beta: String,
    /// Match tolerance (default: 1e-6 for smooth g, 1e-4 otherwise)
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[command(flatten)]
    pub quad: QuadOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args)]
pub struct McmahonArgs {
    /// Two-dimensional nonlinearity
    #[arg(long)]
    pub g: String,
    /// Correlation in (-1, 1)
    #[arg(long)]
    pub alpha: f64,
    /// Derivative order in alpha
    #[arg(long, default_value_t = 1)]
    pub deriv_order: u32,
    #[command(flatten)]
    pub quad: QuadOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args)]
pub struct ClipStudyArgs {
    /// Clipping threshold
    #[arg(long)]
    pub tau: f64,
    /// Number of uniform grid points on [-1, 1]
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[command(flatten)]
    pub quad: QuadOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub cov: String,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutOpts,
}

// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: String, source: std::io::Error },
    Json { context: String, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::DimensionMismatch { .. } => "E_DIM",
                Error::NotPositiveDefinite(_) => "E_NOT_PD",
                Error::InvalidParameter(_) => "E_INVALID",
                Error::DerivativeUnavailable { .. } => "E_DERIV_UNAVAILABLE",
                Error::AtomsNotSampleable => "E_ATOMS",
                Error::NodeBudgetExceeded { .. } => "E_NODE_BUDGET",
                Error::OrderTooLarge { .. } => "E_ORDER",
                Error::StencilLeavesPdCone => "E_STENCIL",
                Error::Parse { .. } => "E_PARSE",
            },
            CliError::Io { .. } => "E_IO",
            CliError::Json { .. } => "E_JSON",
            CliError::Usage(_) => "E_USAGE",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Json { context, message } => write!(f, "{context}: {message}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

/// Fully resolved run configuration, echoed into every output.
#[derive(Serialize)]
pub struct ResolvedConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cov: Option<SymMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fallback_fd: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deriv_order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

impl ResolvedConfig {
    fn new(command: &'static str, format: FormatOpt) -> Self {
        ResolvedConfig {
            command,
            g: None,
            cov: None,
            beta: None,
            order: None,
            scheme: None,
            mc_samples: None,
            seed: None,
            tol: None,
            fd_step: None,
            fallback_fd: None,
            alpha: None,
            deriv_order: None,
            tau: None,
            grid_points: None,
            count: None,
            format: match format {
                FormatOpt::Json => "json",
                FormatOpt::Csv => "csv",
            },
            threads: configured_threads(),
        }
    }
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    config: &'a ResolvedConfig,
    result: R,
}

/// Entry point used by `main` and by tests. Returns the process exit code:
/// 0 on success, 2 when a verification verdict is `Mismatch`, 3 on any
/// input or domain error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("error[E_USAGE]: {}", single_line(&e.to_string()));
            return 3;
        }
    };
    init_worker_pool();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), single_line(&e.to_string()));
            3
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn configured_threads() -> Option<usize> {
    std::env::var("PRICETOOL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn init_worker_pool() {
    if let Some(n) = configured_threads() {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Pair(args) => cmd_pair(args),
        Command::Price(args) => cmd_price(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Mcmahon(args) => cmd_mcmahon(args),
        Command::ClipStudy(args) => cmd_clip_study(args),
        Command::Sample(args) => cmd_sample(args),
    }
}

fn load_sym_matrix(source: &str) -> Result<SymMatrix, CliError> {
    let (text, context) = if let Some(rest) = source.strip_prefix("inline:") {
        (rest.to_string(), "inline covariance".to_string())
    } else {
        let text = fs::read_to_string(source).map_err(|e| CliError::Io {
            path: source.to_string(),
            source: e,
        })?;
        (text, source.to_string())
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Json {
            context: context.clone(),
            message: e.to_string(),
        })?;
    if value.is_array() {
        let rows: Vec<Vec<f64>> =
            serde_json::from_value(value).map_err(|e| CliError::Json {
                context: context.clone(),
                message: e.to_string(),
            })?;
        Ok(SymMatrix::from_rows(&rows)?)
    } else {
        serde_json::from_value(value).map_err(|e| CliError::Json {
            context,
            message: e.to_string(),
        })
    }
}

fn load_model(source: &str) -> Result<(SymMatrix, GaussianModel), CliError> {
    let sym = load_sym_matrix(source)?;
    let cov = CovMatrix::validate(&sym)?;
    Ok((sym, GaussianModel::new(cov)))
}

fn parse_g(spec: &str) -> Result<GeneralizedFunction, CliError> {
    Ok(parse_nonlinearity(spec)?)
}

fn emit<R: Serialize>(
    out: &OutOpts,
    config: &ResolvedConfig,
    result: R,
    csv: Option<String>,
) -> Result<(), CliError> {
    let format = out.format.unwrap_or(FormatOpt::Json);
    let body = match format {
        FormatOpt::Json => output::to_json_string(&Report { config, result }).map_err(|e| {
            CliError::Json {
                context: "serializing result".into(),
                message: e.to_string(),
            }
        })?,
        FormatOpt::Csv => {
            let header = output::csv_config_header(config).map_err(|e| CliError::Json {
                context: "serializing config".into(),
                message: e.to_string(),
            })?;
            let content = csv.expect("csv rendering requested but not provided");
            format!("{header}{content}")
        }
    };
    match &out.out {
        Some(path) => fs::write(path, body).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn estimate_csv(est: &Estimate) -> String {
    format!(
        "value,err,method,samples\n{},{},{:?},{}\n",
        output::csv_float(est.value),
        output::csv_float(est.err),
        est.method,
        est.samples.map(|s| s.to_string()).unwrap_or_default()
    )
}

fn cmd_pair(args: PairArgs) -> Result<i32, CliError> {
    let g = parse_g(&args.g)?;
    let (sym, model) = load_model(&args.cov)?;
    let q = args.quad.resolve(model.n())?;
    let est = match args.mc_samples {
        Some(count) => pair_mc(&g, &model, args.seed, count)?,
        None => pair(&g, &model, &q)?,
    };

    let mut config = ResolvedConfig::new("pair", args.out.format.unwrap_or(FormatOpt::Json));
    config.g = Some(args.g.clone());
    config.cov = Some(sym);
    config.order = Some(q.order_per_axis());
    config.scheme = Some(args.quad.scheme.name());
    config.mc_samples = args.mc_samples;
    config.seed = Some(args.seed);

    let csv = estimate_csv(&est);
    emit(&args.out, &config, &est, Some(csv))?;
    Ok(0)
}

#[derive(Serialize)]
struct PriceResult {
    value: f64,
    err: Option<f64>,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    fd_fallback: bool,
}

fn cmd_price(args: PriceArgs) -> Result<i32, CliError> {
    let g = parse_g(&args.g)?;
    let (sym, model) = load_model(&args.cov)?;
    let coords = omega_unpack(&sym);
    let beta = CovMultiindex::parse(model.n(), &args.beta)?;
    let q = args.quad.resolve(model.n())?;

    let result = match price_derivative(&g, &coords, &beta, &q) {
        Ok(est) => PriceResult {
            value: est.value,
            err: Some(est.err),
            method: format!("{:?}", est.method),
            samples: est.samples,
            fd_fallback: false,
        },
        Err(Error::DerivativeUnavailable { .. }) if args.fallback_fd => {
            let value = fd_derivative(&g, &coords, &beta, args.fd_step, &q)?;
            PriceResult {
                value,
                err: None,
                method: "FiniteDifference".to_string(),
                samples: None,
                fd_fallback: true,
            }
        }
        Err(e) => return Err(e.into()),
    };

    let mut config = ResolvedConfig::new("price", args.out.format.unwrap_or(FormatOpt::Json));
    config.g = Some(args.g.clone());
    config.cov = Some(sym);
    config.beta = Some(args.beta.clone());
    config.order = Some(q.order_per_axis());
    config.scheme = Some(args.quad.scheme.name());
    config.fallback_fd = Some(args.fallback_fd);
    if args.fallback_fd {
        config.fd_step = Some(args.fd_step);
    }

    let csv = format!(
        "value,err,method,fd_fallback\n{},{},{},{}\n",
        output::csv_float(result.value),
        result.err.map(output::csv_float).unwrap_or_default(),
        result.method,
        result.fd_fallback
    );
    emit(&args.out, &config, &result, Some(csv))?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let g = parse_g(&args.g)?;
    let (sym, model) = load_model(&args.cov)?;
    let coords = omega_unpack(&sym);
    let beta = CovMultiindex::parse(model.n(), &args.beta)?;
    let q = args.quad.resolve(model.n())?;
    let tol = args.tol.unwrap_or_else(|| default_verify_tol(&g));

    let report = verify(&g, &coords, &beta, tol, args.fd_step, &q)?;

    let mut config = ResolvedConfig::new("verify", args.out.format.unwrap_or(FormatOpt::Json));
    config.g = Some(args.g.clone());
    config.cov = Some(sym);
    config.beta = Some(args.beta.clone());
    config.order = Some(q.order_per_axis());
    config.scheme = Some(args.quad.scheme.name());
    config.tol = Some(tol);
    config.fd_step = Some(args.fd_step);

    let csv = format!(
        "verdict,price_value,fd_value,abs_gap,fd_step\n{:?},{},{},{},{}\n",
        report.verdict,
        output::csv_float(report.price_value.value),
        report.fd_value.map(output::csv_float).unwrap_or_default(),
        report.abs_gap.map(output::csv_float).unwrap_or_default(),
        report.fd_step.map(output::csv_float).unwrap_or_default(),
    );
    let mismatch = report.verdict == Verdict::Mismatch;
    emit(&args.out, &config, &report, Some(csv))?;
    Ok(if mismatch { 2 } else { 0 })
}

fn cmd_mcmahon(args: McmahonArgs) -> Result<i32, CliError> {
    let g = parse_g(&args.g)?;
    let q = args.quad.resolve(2)?;
    let est = mcmahon_derivative(&g, args.alpha, args.deriv_order, &q)?;

    let mut config = ResolvedConfig::new("mcmahon", args.out.format.unwrap_or(FormatOpt::Json));
    config.g = Some(args.g.clone());
    config.alpha = Some(args.alpha);
    config.deriv_order = Some(args.deriv_order);
    config.order = Some(q.order_per_axis());
    config.scheme = Some(args.quad.scheme.name());

    let csv = estimate_csv(&est);
    emit(&args.out, &config, &est, Some(csv))?;
    Ok(0)
}

fn cmd_clip_study(args: ClipStudyArgs) -> Result<i32, CliError> {
    if args.grid < 2 {
        return Err(CliError::Usage(format!(
            "--grid must be at least 2, got {}",
            args.grid
        )));
    }
    let q = args.quad.resolve(2)?;
    let grid: Vec<f64> = (0..args.grid)
        .map(|k| -1.0 + 2.0 * k as f64 / (args.grid - 1) as f64)
        .collect();
    let curve = f_tau_curve(args.tau, &grid, &q)?;

    let mut config = ResolvedConfig::new("clip-study", args.out.format.unwrap_or(FormatOpt::Csv));
    config.tau = Some(args.tau);
    config.grid_points = Some(args.grid);
    config.order = Some(q.order_per_axis());
    config.scheme = Some(args.quad.scheme.name());

    let format = args.out.format.unwrap_or(FormatOpt::Csv);
    match format {
        FormatOpt::Csv => {
            let csv = curve.to_csv();
            let out = OutOpts {
                out: args.out.out.clone(),
                format: Some(FormatOpt::Csv),
            };
            emit(&out, &config, (), Some(csv))?;
        }
        FormatOpt::Json => emit(&args.out, &config, &curve, None)?,
    }
    Ok(0)
}

fn cmd_sample(args: SampleArgs) -> Result<i32, CliError> {
    let (sym, model) = load_model(&args.cov)?;
    let draws = model.sample(args.seed, args.count);

    let mut config = ResolvedConfig::new("sample", args.out.format.unwrap_or(FormatOpt::Csv));
    config.cov = Some(sym);
    config.count = Some(args.count);
    config.seed = Some(args.seed);

    let format = args.out.format.unwrap_or(FormatOpt::Csv);
    match format {
        FormatOpt::Csv => {
            let mut csv = String::new();
            let header: Vec<String> = (1..=model.n()).map(|k| format!("x{k}")).collect();
            csv.push_str(&header.join(","));
            csv.push('\n');
            for point in &draws {
                let row: Vec<String> = point.iter().map(|&v| output::csv_float(v)).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            let out = OutOpts {
                out: args.out.out.clone(),
                format: Some(FormatOpt::Csv),
            };
            emit(&out, &config, (), Some(csv))?;
        }
        FormatOpt::Json => {
            #[derive(Serialize)]
            struct Points {
                points: Vec<Vec<f64>>,
            }
            emit(&args.out, &config, Points { points: draws }, None)?;
        }
    }
    Ok(0)
}
