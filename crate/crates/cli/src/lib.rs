//! The `nonclassical` command-line tool.
//!
//! Every analysis of the library is a subcommand. Reports are written as
//! JSON, series as CSV, to stdout or to `--out`. The process exit code is
//! machine readable:
//!
//! | code | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success                                                    |
//! | 2    | precondition error (the input is well formed but rejected) |
//! | 3    | parse error (malformed JSON, unknown kind, bad fields)     |
//! | 64   | usage error (unknown subcommand, bad flags)                |

pub mod spec;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonclassical::antibunching::{uniform_tau_grid, DEFAULT_DETECTION_TOL};
use nonclassical::landscape::{ScanPoint, DEFAULT_MAX_ITER};
use nonclassical::stats::DEFAULT_SUB_POISSON_TOL;
use nonclassical::witness::{DEFAULT_FIT_TOL, DEFAULT_GRID_POINTS, DEFAULT_ORDER, DEFAULT_PSD_TOL};
use nonclassical::{
    detect_antibunching, factorial_moments, fit_classical_measure, g2_correlation, hankel_witness,
    min_k_grid, min_k_vertex, projected_gradient_min, scan_k, schwarz_violation_test,
    simulate_classical_intensity, stats_report, AntibunchingReport, ClassicalProcessModel,
    CorrelationSeries, GridSpec, LandscapeResult, MeasureFitResult, MomentSequence, StepRule,
    SupportSet, WitnessReport,
};
use serde::{Deserialize, Serialize};

pub use spec::{parse_state_spec, EmitterSpec, SpecError, StateSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "nonclassical", version, about = "Non-classicality analyses for single-mode light")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Photon statistics of a state: mean, variance, K, Mandel Q.
    Stats(StatsArgs),
    /// Whether factorial moments admit a classical intensity distribution.
    Classicality(ClassicalityArgs),
    /// Intensity correlation of an emitter model by quantum regression.
    G2(G2Args),
    /// Monte Carlo intensity correlation of a classical process.
    ClassicalProcess(ProcessArgs),
    /// Minimum of K over distributions on a finite support.
    KLandscape(LandscapeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// State as inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub state: String,
    /// K must be below −tol to count as sub-Poisson.
    #[arg(long, default_value_t = DEFAULT_SUB_POISSON_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
#[group(id = "input", required = true, multiple = false, args = ["state", "moments"])]
pub struct ClassicalityArgs {
    /// State as inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub state: Option<String>,
    /// JSON file holding factorial moments [m0, m1, ...] with m0 = 1.
    #[arg(long)]
    pub moments: Option<PathBuf>,
    /// Highest moment order taken from --state.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Points in the measure-fit grid.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,
    /// Hankel eigenvalue tolerance.
    #[arg(long, default_value_t = DEFAULT_PSD_TOL)]
    pub psd_tol: f64,
    /// Largest moment residual accepted from the measure fit.
    #[arg(long, default_value_t = DEFAULT_FIT_TOL)]
    pub fit_tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct G2Args {
    /// Emitter model as inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub tau_max: f64,
    #[arg(long)]
    pub tau_points: usize,
    /// Margin P(τ) − P(0) must exceed to count as antibunching.
    #[arg(long, default_value_t = DEFAULT_DETECTION_TOL)]
    pub tol: f64,
    /// `json` for the full report, `csv` for the series alone.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Process model as inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 11)]
    pub tau_points: usize,
    /// Margin P(τ) − P(0) must exceed, beyond three standard errors.
    #[arg(long, default_value_t = DEFAULT_DETECTION_TOL)]
    pub tol: f64,
    /// `json` for the full report, `csv` for the series alone.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Vertex,
    Grid,
    Pgd,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    /// Comma-separated photon numbers, e.g. `1,2`.
    #[arg(long)]
    pub support: String,
    /// Grid points per simplex edge (grid method and CSV scans).
    #[arg(long, default_value_t = 1001)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Vertex)]
    pub method: MethodArg,
    /// Iteration cap for the projected-gradient method.
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// `json` for the minimum, `csv` for the full K scan.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

/// A failure, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Precondition(String),
    Parse(String),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Precondition(m) | CliError::Parse(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<nonclassical::Error> for CliError {
    fn from(e: nonclassical::Error) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::Invalid(inner) => inner.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

/// `classicality` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalityReport {
    pub moments: MomentSequence,
    pub witness: WitnessReport,
    pub fit: MeasureFitResult,
    /// Both tests agree the moments are classical.
    pub classical: bool,
}

/// `g2` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Report {
    pub model: EmitterSpec,
    pub series: CorrelationSeries,
    pub antibunching: AntibunchingReport,
}

/// `classical-process` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub model: ClassicalProcessModel,
    pub samples: usize,
    pub seed: u64,
    pub series: CorrelationSeries,
    pub schwarz_violation: bool,
}

/// Inline JSON, or the contents of the file it names.
fn json_argument(arg: &str) -> Result<String, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(arg.to_owned())
    } else {
        read_file(Path::new(arg))
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Precondition(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("invalid {what}: {e}")))
}

fn check_tol(name: &str, tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Precondition(format!("{name} must be positive, got {tol}")))
    }
}

fn to_json<T: Serialize>(report: &T) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Columns `tau, p_raw, g2, stderr`; absent values are empty.
pub fn series_csv(series: &CorrelationSeries) -> String {
    let opt = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(String::new(), |v| v[i].to_string());
    let header = ["tau", "p_raw", "g2", "stderr"].map(String::from);
    csv_text(
        &header,
        (0..series.len()).map(|i| {
            vec![
                series.tau[i].to_string(),
                series.p_raw[i].to_string(),
                opt(&series.g2, i),
                opt(&series.stderr, i),
            ]
        }),
    )
}

/// One `x_n` column per support index, then `k`.
pub fn scan_csv(support: &SupportSet, scan: &[ScanPoint]) -> String {
    let mut header: Vec<String> = support.indices().iter().map(|n| format!("x_{n}")).collect();
    header.push("k".into());
    csv_text(
        &header,
        scan.iter().map(|p| {
            let mut row: Vec<String> = p.x.iter().map(f64::to_string).collect();
            row.push(p.k.to_string());
            row
        }),
    )
}

pub fn parse_support(text: &str) -> Result<SupportSet, CliError> {
    let indices = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Parse(format!("invalid support `{text}`: {e}")))?;
    Ok(SupportSet::new(indices)?)
}

fn stats(args: &StatsArgs) -> Result<String, CliError> {
    check_tol("--tol", args.tol)?;
    let spec = parse_state_spec(&json_argument(&args.state)?)?;
    Ok(to_json(&stats_report(spec.state(), args.tol)?))
}

fn classicality(args: &ClassicalityArgs) -> Result<String, CliError> {
    check_tol("--psd-tol", args.psd_tol)?;
    check_tol("--fit-tol", args.fit_tol)?;
    let moments = match (&args.state, &args.moments) {
        (Some(state), _) => factorial_moments(parse_state_spec(&json_argument(state)?)?.state(), args.order)?,
        (None, Some(path)) => {
            let values: Vec<f64> = parse_json("moment file", &read_file(path)?)?;
            MomentSequence::new(values)?
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let witness = hankel_witness(&moments, args.psd_tol);
    let fit = fit_classical_measure(&moments, &GridSpec::with_points(args.grid), args.fit_tol)?;
    let classical = witness.classical_feasible && fit.feasible;
    Ok(to_json(&ClassicalityReport {
        moments,
        witness,
        fit,
        classical,
    }))
}

fn g2(args: &G2Args) -> Result<String, CliError> {
    check_tol("--tol", args.tol)?;
    let model: EmitterSpec = parse_json("emitter model", &json_argument(&args.model)?)?;
    let tau = uniform_tau_grid(args.tau_max, args.tau_points)?;
    let series = g2_correlation(&model.build()?, &tau)?;
    Ok(match args.format {
        Format::Csv => series_csv(&series),
        Format::Json => {
            let antibunching = detect_antibunching(&series, args.tol)?;
            to_json(&G2Report {
                model,
                series,
                antibunching,
            })
        }
    })
}

fn classical_process(args: &ProcessArgs) -> Result<String, CliError> {
    check_tol("--tol", args.tol)?;
    let model: ClassicalProcessModel = parse_json("process model", &json_argument(&args.model)?)?;
    let tau = uniform_tau_grid(args.tau_max, args.tau_points)?;
    let series = simulate_classical_intensity(&model, &tau, args.samples, args.seed)?;
    Ok(match args.format {
        Format::Csv => series_csv(&series),
        Format::Json => {
            let schwarz_violation = schwarz_violation_test(&series, args.tol)?;
            to_json(&ProcessReport {
                model,
                samples: args.samples,
                seed: args.seed,
                series,
                schwarz_violation,
            })
        }
    })
}

fn k_landscape(args: &LandscapeArgs) -> Result<String, CliError> {
    let support = parse_support(&args.support)?;
    if args.format == Format::Csv {
        return Ok(scan_csv(&support, &scan_k(&support, args.resolution)?));
    }
    let result: LandscapeResult = match args.method {
        MethodArg::Vertex => min_k_vertex(&support),
        MethodArg::Grid => min_k_grid(&support, args.resolution)?,
        MethodArg::Pgd => {
            projected_gradient_min(&support, &support.uniform(), args.max_iter, StepRule::default())?
        }
    };
    Ok(to_json(&result))
}

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Stats(a) => &a.output,
        Command::Classicality(a) => &a.output,
        Command::G2(a) => &a.output,
        Command::ClassicalProcess(a) => &a.output,
        Command::KLandscape(a) => &a.output,
    }
}

/// Runs a parsed command and returns the text it produces.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Stats(a) => stats(a),
        Command::Classicality(a) => classicality(a),
        Command::G2(a) => g2(a),
        Command::ClassicalProcess(a) => classical_process(a),
        Command::KLandscape(a) => k_landscape(a),
    }
}

/// Parses `argv` (program name first), runs the command, writes the
/// result to `stdout` or `--out` and diagnostics to `stderr`, and returns
/// the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return EXIT_USAGE;
        }
    };
    let result = execute(&cli.command).and_then(|text| match &output_of(&cli.command).out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::Precondition(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Precondition(format!("cannot write output: {e}"))),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
