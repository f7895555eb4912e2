//! The `bench` subcommand: sweep one dataset dimension (N rows, M samples
//! per row, or K categories), fit each point with the selected methods, and
//! emit one CSV row per (point, method).
//!
//! Datasets are synthesized deterministically from the seed. Each
//! measurement excludes one warm-up fit and reports the median of the
//! remaining repeats, column by column.

use clap::{Args, ValueEnum};

use polyafit::{
    fit_dm, synthesize, CountMatrix, DirichletParams, FitInput, Method, RowTotals, SolverConfig,
    SynthSpec,
};

use crate::cli_error::{input_err, CliError};
use crate::parse_alpha;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    /// Scale the number of rows.
    N,
    /// Scale the samples per row.
    M,
    /// Scale the number of categories (with alpha_k = 1/K).
    K,
}

impl Sweep {
    fn label(self) -> &'static str {
        match self {
            Sweep::N => "N",
            Sweep::M => "M",
            Sweep::K => "K",
        }
    }
}

#[derive(Args)]
pub struct BenchArgs {
    /// Which dimension to sweep.
    #[arg(long, value_enum)]
    sweep: Sweep,
    /// First sweep value.
    #[arg(long)]
    from: u64,
    /// Last sweep value (inclusive; the sweep stops at the largest point
    /// not exceeding it).
    #[arg(long)]
    to: u64,
    /// Multiplicative step between points.
    #[arg(long, default_value_t = 2.0)]
    factor: f64,
    /// Comma-separated method list.
    #[arg(long, default_value = "newton-compressed,fp-compressed,fp-naive,newton-naive")]
    methods: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Row count for the M and K sweeps.
    #[arg(long, default_value_t = 5000)]
    rows: u64,
    /// Samples per row for the N sweep (default 10) and K sweep (default 50).
    #[arg(long)]
    row_total: Option<u64>,
    /// Generating parameter for the N and M sweeps.
    #[arg(long, default_value = "3,1,2")]
    alpha: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: u32,
    /// Timed runs per point (after one excluded warm-up).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

pub fn run(args: &BenchArgs) -> Result<u8, CliError> {
    if args.factor <= 1.0 {
        return Err(input_err("--factor must be greater than 1"));
    }
    if args.from == 0 || args.from > args.to {
        return Err(input_err("need 0 < --from <= --to"));
    }
    if args.repeats == 0 {
        return Err(input_err("--repeats must be at least 1"));
    }
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(|t| t.trim().parse::<Method>().map_err(CliError::from))
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(input_err("--methods must name at least one method"));
    }
    let base_alpha = parse_alpha(&args.alpha)?;

    println!(
        "sweep,value,method,precompute_seconds,solve_seconds,total_seconds,iterations,converged"
    );
    for (index, value) in sweep_points(args.from, args.to, args.factor).into_iter().enumerate() {
        let (alpha, rows, row_total) = match args.sweep {
            Sweep::N => (base_alpha.clone(), value, args.row_total.unwrap_or(10)),
            Sweep::M => (base_alpha.clone(), args.rows, value),
            Sweep::K => {
                if value < 2 {
                    return Err(input_err("K sweep values must be at least 2"));
                }
                (vec![1.0 / value as f64; value as usize], args.rows, args.row_total.unwrap_or(50))
            }
        };
        let spec = SynthSpec {
            alpha: DirichletParams::new(alpha)?,
            rows,
            row_totals: RowTotals::Fixed(row_total),
            seed: args.seed.wrapping_add(index as u64),
        };
        let data = synthesize(&spec);
        for &method in &methods {
            let config = SolverConfig {
                method,
                tol: args.tol,
                max_iters: args.max_iters,
                ..Default::default()
            };
            print_point(args.sweep, value, method, &data, &config, args.repeats);
        }
    }
    Ok(0)
}

fn sweep_points(from: u64, to: u64, factor: f64) -> Vec<u64> {
    let mut points = Vec::new();
    let mut value = from;
    while value <= to {
        points.push(value);
        let next = ((value as f64) * factor).round() as u64;
        value = next.max(value + 1);
    }
    points
}

fn print_point(
    sweep: Sweep,
    value: u64,
    method: Method,
    data: &CountMatrix,
    config: &SolverConfig,
    repeats: usize,
) {
    // Warm-up run, excluded from the timings.
    let warmup = fit_dm(FitInput::Counts(data), config);
    if let Err(err) = warmup {
        eprintln!("warning: {} at {}={} failed: {err}", method, sweep.label(), value);
        println!("{},{},{},0,0,0,0,false", sweep.label(), value, method);
        return;
    }
    let mut precompute = Vec::with_capacity(repeats);
    let mut solve = Vec::with_capacity(repeats);
    let mut total = Vec::with_capacity(repeats);
    let mut last = warmup.expect("checked above");
    for _ in 0..repeats {
        match fit_dm(FitInput::Counts(data), config) {
            Ok(report) => {
                precompute.push(report.timings.precompute.as_secs_f64());
                solve.push(report.timings.solve.as_secs_f64());
                total.push(report.timings.total().as_secs_f64());
                last = report;
            }
            Err(err) => {
                eprintln!(
                    "warning: {} at {}={} failed: {err}",
                    method,
                    sweep.label(),
                    value
                );
                println!("{},{},{},0,0,0,0,false", sweep.label(), value, method);
                return;
            }
        }
    }
    println!(
        "{},{},{},{},{},{},{},{}",
        sweep.label(),
        value,
        method,
        median(&mut precompute),
        median(&mut solve),
        median(&mut total),
        last.iterations,
        last.converged
    );
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}
