//! The Dirichlet-multinomial (Polya) distribution: likelihood, gradients,
//! and four maximum-likelihood fitting algorithms.
//!
//! The compressed methods read only the survival tallies `(U, v)` and cost
//! O(MK) per iteration after the one-time compression pass; the naive
//! methods rescan the count matrix every iteration with digamma/trigamma
//! row sums and cost O(NK) per iteration. All four maximize the same
//! objective and agree on the estimate from the same start.

use std::time::Instant;

use crate::compressed::{CompressedStats, CountMatrix};
use crate::dirichlet::{moment_init_from_rows, DirichletParams};
use crate::error::{Error, Result};
use crate::newton::StructuredHessian;
use crate::parallel;
use crate::solver::{
    fixed_point_fit, newton_fit, Method, SolverConfig, SolverReport, Timings,
};
use crate::special::{digamma, dual_log_gamma, trigamma};

/// Components at or below this after an update raise a boundary diagnostic;
/// the maximum for an unobserved (or nearly unobserved) category sits at
/// zero, outside the parameter space.
pub const ALPHA_FLOOR: f64 = 1e-12;

/// Log-probability of one count vector under the Dirichlet-multinomial,
/// including the multinomial coefficient. All-zero counts have probability
/// one.
pub fn dm_log_prob(alpha: &DirichletParams, counts: &[u64]) -> Result<f64> {
    if counts.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: counts.len() });
    }
    let total = counts
        .iter()
        .try_fold(0u64, |acc, &c| acc.checked_add(c))
        .ok_or(Error::TallyOverflow)?;
    let mut value = dual_log_gamma(1.0, total) - dual_log_gamma(alpha.sum(), total);
    for (&a, &c) in alpha.as_slice().iter().zip(counts) {
        value += dual_log_gamma(a, c) - dual_log_gamma(1.0, c);
    }
    Ok(value)
}

/// The log-likelihood terms that depend on alpha, summed over the raw rows:
/// `sum_n [ sum_k LG(alpha_k, d_nk) - LG(sum alpha, total_n) ]` where
/// `LG(a, n) = ln_gamma(a + n) - ln_gamma(a)`. All-zero rows contribute
/// nothing.
pub fn dm_objective_naive(data: &CountMatrix, alpha: &DirichletParams) -> f64 {
    assert_eq!(data.k(), alpha.len(), "data/alpha dimension mismatch");
    objective_naive_slice(data, alpha.as_slice())
}

fn objective_naive_slice(data: &CountMatrix, alpha: &[f64]) -> f64 {
    let alpha_sum: f64 = alpha.iter().sum();
    parallel::map_reduce(
        data.n_rows(),
        |range| {
            let mut acc = 0.0;
            for n in range {
                let row = data.row(n);
                let total: u64 = row.iter().sum();
                if total == 0 {
                    continue;
                }
                for (&a, &c) in alpha.iter().zip(row) {
                    if c > 0 {
                        acc += dual_log_gamma(a, c);
                    }
                }
                acc -= dual_log_gamma(alpha_sum, total);
            }
            acc
        },
        |a, b| a + b,
    )
    .unwrap_or(0.0)
}

/// Same objective evaluated from the tallies in O(MK):
/// `sum_k sum_m u[k][m] ln(alpha_k + m) - sum_m v[m] ln(sum alpha + m)`.
pub fn dm_objective_compressed(stats: &CompressedStats, alpha: &DirichletParams) -> f64 {
    assert_eq!(stats.k(), alpha.len(), "stats/alpha dimension mismatch");
    objective_compressed_slice(stats, alpha.as_slice())
}

fn objective_compressed_slice(stats: &CompressedStats, alpha: &[f64]) -> f64 {
    let mut value = 0.0;
    for (k, &a) in alpha.iter().enumerate() {
        for (m, &u) in stats.u_row(k).iter().enumerate() {
            if u == 0 {
                break; // tallies are non-increasing
            }
            value += u as f64 * (a + m as f64).ln();
        }
    }
    let alpha_sum: f64 = alpha.iter().sum();
    for (m, &v) in stats.v().iter().enumerate() {
        value -= v as f64 * (alpha_sum + m as f64).ln();
    }
    value
}

/// Numerator vector and shared denominator of the gradient:
/// `num_k = sum_m u[k][m] / (alpha_k + m)`, `den = sum_m v[m] / (sum alpha + m)`.
/// The gradient is `num_k - den` and the fixed-point update is
/// `alpha_k * num_k / den`.
fn grad_terms_compressed(stats: &CompressedStats, alpha: &[f64]) -> (Vec<f64>, f64) {
    let num: Vec<f64> = alpha
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let mut acc = 0.0;
            for (m, &u) in stats.u_row(k).iter().enumerate() {
                if u == 0 {
                    break;
                }
                acc += u as f64 / (a + m as f64);
            }
            acc
        })
        .collect();
    let alpha_sum: f64 = alpha.iter().sum();
    let mut den = 0.0;
    for (m, &v) in stats.v().iter().enumerate() {
        den += v as f64 / (alpha_sum + m as f64);
    }
    (num, den)
}

/// Gradient of the objective from the tallies, O(MK).
pub fn dm_gradient_compressed(stats: &CompressedStats, alpha: &DirichletParams) -> Vec<f64> {
    assert_eq!(stats.k(), alpha.len(), "stats/alpha dimension mismatch");
    let (num, den) = grad_terms_compressed(stats, alpha.as_slice());
    num.into_iter().map(|n| n - den).collect()
}

/// Hessian from the tallies: constant `sum_m v[m] / (sum alpha + m)^2`,
/// diagonal `-sum_m u[i][m] / (alpha_i + m)^2`.
pub fn dm_hessian_compressed(
    stats: &CompressedStats,
    alpha: &DirichletParams,
) -> StructuredHessian {
    assert_eq!(stats.k(), alpha.len(), "stats/alpha dimension mismatch");
    hessian_compressed_slice(stats, alpha.as_slice())
}

fn hessian_compressed_slice(stats: &CompressedStats, alpha: &[f64]) -> StructuredHessian {
    let diag: Vec<f64> = alpha
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let mut acc = 0.0;
            for (m, &u) in stats.u_row(k).iter().enumerate() {
                if u == 0 {
                    break;
                }
                let t = a + m as f64;
                acc += u as f64 / (t * t);
            }
            -acc
        })
        .collect();
    let alpha_sum: f64 = alpha.iter().sum();
    let mut constant = 0.0;
    for (m, &v) in stats.v().iter().enumerate() {
        let t = alpha_sum + m as f64;
        constant += v as f64 / (t * t);
    }
    StructuredHessian { diag, constant }
}

/// Gradient terms from the raw rows via the digamma recurrence:
/// `num_k = sum_n [psi(alpha_k + d_nk) - psi(alpha_k)]`,
/// `den = sum_n [psi(sum alpha + total_n) - psi(sum alpha)]`.
fn grad_terms_naive(data: &CountMatrix, alpha: &[f64]) -> (Vec<f64>, f64) {
    let k = alpha.len();
    let alpha_sum: f64 = alpha.iter().sum();
    let dig_alpha: Vec<f64> = alpha.iter().map(|&a| digamma(a)).collect();
    let dig_sum = digamma(alpha_sum);
    let (num, den) = parallel::map_reduce(
        data.n_rows(),
        |range| {
            let mut num = vec![0.0f64; k];
            let mut den = 0.0f64;
            for n in range {
                let row = data.row(n);
                let total: u64 = row.iter().sum();
                if total == 0 {
                    continue;
                }
                for (j, &c) in row.iter().enumerate() {
                    if c > 0 {
                        num[j] += digamma(alpha[j] + c as f64) - dig_alpha[j];
                    }
                }
                den += digamma(alpha_sum + total as f64) - dig_sum;
            }
            (num, den)
        },
        |(mut num_a, den_a), (num_b, den_b)| {
            for (x, y) in num_a.iter_mut().zip(&num_b) {
                *x += y;
            }
            (num_a, den_a + den_b)
        },
    )
    .unwrap_or_else(|| (vec![0.0; k], 0.0));
    (num, den)
}

/// Gradient via digamma row sums over the raw data, O(NK).
pub fn dm_gradient_naive(data: &CountMatrix, alpha: &DirichletParams) -> Vec<f64> {
    assert_eq!(data.k(), alpha.len(), "data/alpha dimension mismatch");
    let (num, den) = grad_terms_naive(data, alpha.as_slice());
    num.into_iter().map(|n| n - den).collect()
}

/// Hessian via trigamma row sums over the raw data, O(NK).
pub fn dm_hessian_naive(data: &CountMatrix, alpha: &DirichletParams) -> StructuredHessian {
    assert_eq!(data.k(), alpha.len(), "data/alpha dimension mismatch");
    hessian_naive_slice(data, alpha.as_slice())
}

fn hessian_naive_slice(data: &CountMatrix, slice: &[f64]) -> StructuredHessian {
    let k = slice.len();
    let alpha_sum: f64 = slice.iter().sum();
    let trig_alpha: Vec<f64> = slice.iter().map(|&a| trigamma(a)).collect();
    let trig_sum = trigamma(alpha_sum);
    let (diag, constant) = parallel::map_reduce(
        data.n_rows(),
        |range| {
            let mut diag = vec![0.0f64; k];
            let mut constant = 0.0f64;
            for n in range {
                let row = data.row(n);
                let total: u64 = row.iter().sum();
                if total == 0 {
                    continue;
                }
                for (j, &c) in row.iter().enumerate() {
                    if c > 0 {
                        diag[j] += trigamma(slice[j] + c as f64) - trig_alpha[j];
                    }
                }
                constant += trig_sum - trigamma(alpha_sum + total as f64);
            }
            (diag, constant)
        },
        |(mut diag_a, c_a), (diag_b, c_b)| {
            for (x, y) in diag_a.iter_mut().zip(&diag_b) {
                *x += y;
            }
            (diag_a, c_a + c_b)
        },
    )
    .unwrap_or_else(|| (vec![0.0; k], 0.0));
    StructuredHessian { diag, constant }
}

fn fp_step_from_terms(alpha: &DirichletParams, num: &[f64], den: f64) -> Result<DirichletParams> {
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateDenominator);
    }
    let next: Vec<f64> =
        alpha.as_slice().iter().zip(num).map(|(&a, &n)| a * n / den).collect();
    if let Some(component) = next.iter().position(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::BoundaryMle { component, floor: 0.0 });
    }
    DirichletParams::new(next)
}

/// One multiplicative fixed-point update from the tallies:
/// `alpha_k * (sum_m u[k][m] / (alpha_k + m)) / (sum_m v[m] / (sum alpha + m))`.
pub fn fp_step_compressed(
    stats: &CompressedStats,
    alpha: &DirichletParams,
) -> Result<DirichletParams> {
    if stats.k() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: stats.k(), got: alpha.len() });
    }
    let (num, den) = grad_terms_compressed(stats, alpha.as_slice());
    fp_step_from_terms(alpha, &num, den)
}

/// One fixed-point update with digamma row sums over the raw data;
/// equals [`fp_step_compressed`] on equivalent inputs.
pub fn fp_step_naive(data: &CountMatrix, alpha: &DirichletParams) -> Result<DirichletParams> {
    if data.k() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: data.k(), got: alpha.len() });
    }
    let (num, den) = grad_terms_naive(data, alpha.as_slice());
    fp_step_from_terms(alpha, &num, den)
}

/// Input to [`fit_dm`]: either raw counts or precompiled tallies. The
/// naive methods need the raw counts.
#[derive(Debug, Clone, Copy)]
pub enum FitInput<'a> {
    Counts(&'a CountMatrix),
    Stats(&'a CompressedStats),
}

impl FitInput<'_> {
    pub fn k(&self) -> usize {
        match self {
            FitInput::Counts(c) => c.k(),
            FitInput::Stats(s) => s.k(),
        }
    }
}

/// Fits a Dirichlet-multinomial with the configured method.
///
/// The compressed methods build the tallies once (timed as the precompute
/// phase) and iterate on them; handing in [`FitInput::Stats`] skips the
/// build. Unobserved categories and empty datasets fail up front with
/// boundary diagnostics instead of drifting toward the parameter boundary.
pub fn fit_dm(input: FitInput<'_>, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let init = config.initial_alpha(input.k())?;
    match config.method {
        Method::NewtonCompressed | Method::FpCompressed => {
            let built;
            let mut timings = Timings::default();
            let stats = match input {
                FitInput::Stats(s) => s,
                FitInput::Counts(c) => {
                    let started = Instant::now();
                    built = CompressedStats::from_counts(c)?;
                    timings.precompute = started.elapsed();
                    &built
                }
            };
            check_observed_compressed(stats)?;
            let started = Instant::now();
            let outcome = if config.method == Method::NewtonCompressed {
                newton_fit(
                    init,
                    config,
                    Some(ALPHA_FLOOR),
                    |a| {
                        let (num, den) = grad_terms_compressed(stats, a);
                        num.into_iter().map(|n| n - den).collect()
                    },
                    |a| hessian_compressed_slice(stats, a),
                    |a| objective_compressed_slice(stats, a),
                )?
            } else {
                fixed_point_fit(
                    init,
                    config,
                    Some(ALPHA_FLOOR),
                    |a| grad_terms_compressed(stats, a),
                    |a| objective_compressed_slice(stats, a),
                )?
            };
            timings.solve = started.elapsed();
            Ok(report_from(config.method, outcome, timings))
        }
        Method::NewtonNaive | Method::FpNaive => {
            let data = match input {
                FitInput::Counts(c) => c,
                FitInput::Stats(_) => {
                    return Err(Error::NeedsCountData { method: config.method.name() })
                }
            };
            check_observed_counts(data)?;
            let started = Instant::now();
            let outcome = if config.method == Method::NewtonNaive {
                newton_fit(
                    init,
                    config,
                    Some(ALPHA_FLOOR),
                    |a| {
                        let (num, den) = grad_terms_naive(data, a);
                        num.into_iter().map(|n| n - den).collect()
                    },
                    |a| hessian_naive_slice(data, a),
                    |a| objective_naive_slice(data, a),
                )?
            } else {
                fixed_point_fit(
                    init,
                    config,
                    Some(ALPHA_FLOOR),
                    |a| grad_terms_naive(data, a),
                    |a| objective_naive_slice(data, a),
                )?
            };
            let timings = Timings { precompute: Default::default(), solve: started.elapsed() };
            Ok(report_from(config.method, outcome, timings))
        }
    }
}

fn report_from(method: Method, outcome: crate::solver::FitOutcome, timings: Timings) -> SolverReport {
    SolverReport {
        method,
        alpha_hat: outcome.alpha,
        iterations: outcome.iterations,
        final_grad_norm: outcome.grad_norm,
        converged: outcome.converged,
        objective: outcome.objective,
        timings,
    }
}

fn check_observed_compressed(stats: &CompressedStats) -> Result<()> {
    if stats.n_effective() == 0 {
        return Err(Error::NoEffectiveRows);
    }
    for k in 0..stats.k() {
        if stats.column_mass(k) == 0 {
            return Err(Error::BoundaryMle { component: k, floor: ALPHA_FLOOR });
        }
    }
    Ok(())
}

fn check_observed_counts(data: &CountMatrix) -> Result<()> {
    let mut column_mass = vec![0u64; data.k()];
    for row in data.rows() {
        for (slot, &c) in column_mass.iter_mut().zip(row) {
            *slot |= c; // only zero/nonzero matters
        }
    }
    if column_mass.iter().all(|&m| m == 0) {
        return Err(Error::NoEffectiveRows);
    }
    if let Some(component) = column_mass.iter().position(|&m| m == 0) {
        return Err(Error::BoundaryMle { component, floor: ALPHA_FLOOR });
    }
    Ok(())
}

/// Method-of-moments starting point from count rows: rows are normalized to
/// empirical probabilities and matched to the Dirichlet mean and a shared
/// precision. All-zero rows are skipped.
pub fn moment_init(data: &CountMatrix) -> Result<DirichletParams> {
    let rows = data.rows().filter_map(|row| {
        let total: u64 = row.iter().sum();
        (total > 0).then(|| {
            let t = total as f64;
            row.iter().map(|&c| c as f64 / t).collect::<Vec<f64>>()
        })
    });
    moment_init_from_rows(data.k(), rows)
}
