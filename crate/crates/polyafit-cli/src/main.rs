//! `polyafit`: fit, sample, compress, and benchmark Dirichlet-multinomial
//! count data from the command line.
//!
//! Exit codes: 0 converged, 10 not converged within the iteration budget,
//! 11 solver diagnostics (divergence, boundary maximum, degenerate data),
//! 12 input or configuration errors. Usage errors from flag parsing exit
//! with clap's status 2.

mod bench;
mod cli_error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polyafit::io::{self, DatasetFormat};
use polyafit::solver::Timings;
use polyafit::{
    dirichlet, dm, fit_dirichlet, fit_dm, suff_stat, CompressedStats, CountMatrix,
    DirichletParams, FitInput, Init, Method, RowTotals, SolverConfig, SolverReport, SynthSpec,
};

use cli_error::{input_err, CliError};

pub(crate) const EXIT_NOT_CONVERGED: u8 = 10;
pub(crate) const EXIT_DEGENERATE: u8 = 11;
pub(crate) const EXIT_INPUT: u8 = 12;

#[derive(Parser)]
#[command(
    name = "polyafit",
    version,
    about = "Maximum-likelihood estimation for Dirichlet and Dirichlet-multinomial count data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit parameters to a dataset and print a key-value report.
    Fit(FitArgs),
    /// Compress datasets into the portable statistics format (and merge
    /// multiple inputs).
    Stats(StatsArgs),
    /// Generate a synthetic count dataset.
    Sample(SampleArgs),
    /// Sweep a dataset dimension and emit per-method timing rows as CSV.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Auto,
    Dense,
    Sparse,
    Stats,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Count rows (Dirichlet-multinomial problem).
    Dm,
    /// Probability rows (pure Dirichlet problem).
    Dirichlet,
}

#[derive(Args)]
struct FitArgs {
    /// Input dataset path.
    input: PathBuf,
    /// On-disk layout; `auto` sniffs the first meaningful line.
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Whether rows are counts or probability vectors.
    #[arg(long, value_enum, default_value = "dm")]
    kind: Kind,
    /// Fitting algorithm (count data only; the Dirichlet fit is Newton).
    #[arg(long, default_value = "newton-compressed")]
    method: String,
    /// Convergence threshold on the gradient infinity norm.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: u32,
    /// Starting point: `ones`, `moments`, or a comma-separated vector.
    #[arg(long, default_value = "ones")]
    init: String,
    /// Divergence guard on the largest component.
    #[arg(long, default_value_t = 1e7)]
    alpha_cap: f64,
}

#[derive(Args)]
struct StatsArgs {
    /// Dataset or statistics files; all inputs are merged.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Generating parameter, comma-separated (e.g. `3,1,2`).
    #[arg(long)]
    alpha: String,
    /// Number of rows.
    #[arg(long)]
    rows: u64,
    /// Samples per row: a fixed count `10` or an inclusive range `2..50`.
    #[arg(long, default_value = "10")]
    row_total: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output layout for the dataset.
    #[arg(long, value_enum, default_value = "dense")]
    format: SampleFormat,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleFormat {
    Dense,
    Sparse,
}

fn main() -> ExitCode {
    // Die quietly on closed pipes (e.g. `polyafit ... | head`) like other
    // line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Stats(args) => cmd_stats(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::Bench(args) => bench::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn resolve_format(arg: FormatArg, text: &str) -> DatasetFormat {
    match arg {
        FormatArg::Auto => io::sniff_format(text),
        FormatArg::Dense => DatasetFormat::Dense,
        FormatArg::Sparse => DatasetFormat::Sparse,
        FormatArg::Stats => DatasetFormat::Stats,
    }
}

pub(crate) fn parse_alpha(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| input_err(format!("invalid alpha component {t:?}")))
        })
        .collect()
}

pub(crate) fn parse_row_total(text: &str) -> Result<RowTotals, CliError> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo = lo
            .trim()
            .parse::<u64>()
            .map_err(|_| input_err(format!("invalid row-total bound {lo:?}")))?;
        let hi = hi
            .trim()
            .parse::<u64>()
            .map_err(|_| input_err(format!("invalid row-total bound {hi:?}")))?;
        if lo > hi {
            return Err(input_err(format!("empty row-total range {lo}..{hi}")));
        }
        Ok(RowTotals::Uniform { lo, hi })
    } else {
        let n = text
            .trim()
            .parse::<u64>()
            .map_err(|_| input_err(format!("invalid row total {text:?}")))?;
        Ok(RowTotals::Fixed(n))
    }
}

enum LoadedData {
    Counts(CountMatrix),
    Stats(CompressedStats),
}

fn load_count_input(args: &FitArgs, text: &str) -> Result<LoadedData, CliError> {
    match resolve_format(args.format, text) {
        DatasetFormat::Dense => Ok(LoadedData::Counts(io::parse_counts_dense(text)?)),
        DatasetFormat::Sparse => Ok(LoadedData::Counts(io::parse_counts_sparse(text)?)),
        DatasetFormat::Stats => Ok(LoadedData::Stats(io::parse_stats(text)?)),
    }
}

fn resolve_init(
    init: &str,
    data: &LoadedData,
) -> Result<Init, CliError> {
    match init {
        "ones" => Ok(Init::AllOnes),
        "moments" => match data {
            LoadedData::Counts(counts) => Ok(Init::Custom(dm::moment_init(counts)?.into_vec())),
            LoadedData::Stats(_) => Err(input_err(
                "--init moments needs the raw dataset; statistics files do not carry moments",
            )),
        },
        list => Ok(Init::Custom(parse_alpha(list)?)),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<u8, CliError> {
    let text = read_input(&args.input)?;
    match args.kind {
        Kind::Dm => {
            let method: Method = args.method.parse()?;
            let data = load_count_input(args, &text)?;
            let config = SolverConfig {
                method,
                tol: args.tol,
                max_iters: args.max_iters,
                init: resolve_init(&args.init, &data)?,
                alpha_cap: args.alpha_cap,
            };
            let (report, shape) = match &data {
                LoadedData::Counts(counts) => {
                    (fit_dm(FitInput::Counts(counts), &config)?, DataShape::from_counts(counts))
                }
                LoadedData::Stats(stats) => {
                    (fit_dm(FitInput::Stats(stats), &config)?, DataShape::from_stats(stats))
                }
            };
            print_report(&report, "dm", &shape);
            Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Kind::Dirichlet => {
            if args.method != "newton-compressed" {
                return Err(input_err(
                    "the Dirichlet fit is Newton-only; drop --method for --kind dirichlet",
                ));
            }
            match resolve_format(args.format, &text) {
                DatasetFormat::Dense => {}
                _ => {
                    return Err(input_err(
                        "--kind dirichlet expects dense probability rows",
                    ))
                }
            }
            let data = io::parse_probabilities_dense(&text)?;
            let init = match args.init.as_str() {
                "ones" => Init::AllOnes,
                "moments" => Init::Custom(dirichlet::moment_init(&data)?.into_vec()),
                list => Init::Custom(parse_alpha(list)?),
            };
            let config = SolverConfig {
                tol: args.tol,
                max_iters: args.max_iters,
                init,
                alpha_cap: args.alpha_cap,
                ..Default::default()
            };
            let started = Instant::now();
            let stat = suff_stat(&data);
            let precompute = started.elapsed();
            let mut report = fit_dirichlet(&stat, &config)?;
            report.timings = Timings { precompute, solve: report.timings.solve };
            let shape = DataShape {
                categories: data.k(),
                rows: data.n_rows() as u64,
                rows_effective: data.n_rows() as u64,
                max_row_total: None,
            };
            print_report(&report, "dirichlet", &shape);
            Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
    }
}

struct DataShape {
    categories: usize,
    rows: u64,
    rows_effective: u64,
    max_row_total: Option<u64>,
}

impl DataShape {
    fn from_counts(data: &CountMatrix) -> Self {
        let mut rows_effective = 0u64;
        let mut max_row_total = 0u64;
        for row in data.rows() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                rows_effective += 1;
            }
            max_row_total = max_row_total.max(total);
        }
        Self {
            categories: data.k(),
            rows: data.n_rows() as u64,
            rows_effective,
            max_row_total: Some(max_row_total),
        }
    }

    fn from_stats(stats: &CompressedStats) -> Self {
        Self {
            categories: stats.k(),
            rows: stats.n_rows(),
            rows_effective: stats.n_effective(),
            max_row_total: Some(stats.m() as u64),
        }
    }
}

/// Stable key-value report schema; one key per line, values space-separated.
fn print_report(report: &SolverReport, kind: &str, shape: &DataShape) {
    println!("method {}", report.method);
    println!("kind {kind}");
    println!("converged {}", report.converged);
    println!("iterations {}", report.iterations);
    println!("final_grad_norm {:e}", report.final_grad_norm);
    println!("objective {}", report.objective);
    let alpha: Vec<String> =
        report.alpha_hat.as_slice().iter().map(|a| a.to_string()).collect();
    println!("alpha_hat {}", alpha.join(" "));
    println!("categories {}", shape.categories);
    println!("rows {}", shape.rows);
    println!("rows_effective {}", shape.rows_effective);
    if let Some(m) = shape.max_row_total {
        println!("max_row_total {m}");
    }
    println!("precompute_seconds {}", report.timings.precompute.as_secs_f64());
    println!("solve_seconds {}", report.timings.solve.as_secs_f64());
    println!("total_seconds {}", report.timings.total().as_secs_f64());
}

fn cmd_stats(args: &StatsArgs) -> Result<u8, CliError> {
    let mut merged: Option<CompressedStats> = None;
    for path in &args.inputs {
        let text = read_input(path)?;
        let stats = match resolve_format(args.format, &text) {
            DatasetFormat::Dense => {
                CompressedStats::from_counts(&io::parse_counts_dense(&text)?)?
            }
            DatasetFormat::Sparse => {
                CompressedStats::from_counts(&io::parse_counts_sparse(&text)?)?
            }
            DatasetFormat::Stats => io::parse_stats(&text)?,
        };
        merged = Some(match merged {
            None => stats,
            Some(acc) => acc.merge(&stats).map_err(|e| {
                CliError::Input(format!("cannot merge {}: {e}", path.display()))
            })?,
        });
    }
    let merged = merged.expect("clap enforces at least one input");
    write_output(args.output.as_deref(), &io::format_stats(&merged))?;
    Ok(0)
}

fn cmd_sample(args: &SampleArgs) -> Result<u8, CliError> {
    let alpha = DirichletParams::new(parse_alpha(&args.alpha)?)?;
    if args.rows == 0 {
        return Err(input_err("--rows must be at least 1"));
    }
    let row_totals = parse_row_total(&args.row_total)?;
    let spec = SynthSpec { alpha, rows: args.rows, row_totals, seed: args.seed };
    eprintln!(
        "sample alpha={} rows={} row_total={} seed={}",
        args.alpha.trim(),
        args.rows,
        args.row_total.trim(),
        args.seed
    );
    let data = polyafit::synthesize(&spec);
    let text = match args.format {
        SampleFormat::Dense => io::format_counts_dense(&data),
        SampleFormat::Sparse => io::format_counts_sparse(&data),
    };
    write_output(args.output.as_deref(), &text)?;
    Ok(0)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
