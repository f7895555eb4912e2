//! The Dirichlet distribution and its maximum-likelihood fit from directly
//! observed probability vectors.
//!
//! The data enters the objective only through a K-vector of mean
//! log-probabilities, so the fit costs O(K) per Newton iteration no matter
//! how many rows went in.

use crate::error::{Error, Result};
use crate::newton::StructuredHessian;
use crate::parallel;
use crate::solver::{newton_fit, SolverConfig, SolverReport, Timings};
use crate::special::{digamma, ln_gamma, trigamma};

/// A strictly positive concentration vector with at least two categories.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams(Vec<f64>);

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::TooFewCategories(alpha.len()));
        }
        for (index, &value) in alpha.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidAlpha { index, value });
            }
        }
        Ok(Self(alpha))
    }

    /// A symmetric parameter with every component equal to `value`.
    pub fn symmetric(k: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for DirichletParams {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// N rows of strictly positive K-vectors, each summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    k: usize,
    data: Vec<f64>,
}

/// Allowed deviation of a row sum from 1.
const ROW_SUM_TOL: f64 = 1e-9;

impl ProbabilityMatrix {
    pub fn from_rows<R>(k: usize, rows: impl IntoIterator<Item = R>) -> Result<Self>
    where
        R: AsRef<[f64]>,
    {
        if k < 2 {
            return Err(Error::TooFewCategories(k));
        }
        let mut data = Vec::new();
        for (row_idx, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            let sum: f64 = row.iter().sum();
            let valid = row.iter().all(|&p| p > 0.0 && p.is_finite())
                && (sum - 1.0).abs() <= ROW_SUM_TOL;
            if !valid {
                return Err(Error::InvalidProbabilityRow { row: row_idx, sum });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { k, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.k..(n + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }
}

/// The mean log-probability vector; everything the fit needs to know about
/// the data.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSuffStat {
    /// Componentwise mean of row logs; every entry is negative.
    pub mean_log: Vec<f64>,
    /// Rows the statistic was computed from.
    pub n_rows: u64,
}

impl DirichletSuffStat {
    pub fn k(&self) -> usize {
        self.mean_log.len()
    }
}

/// Log-density of the Dirichlet at a point of the open simplex.
pub fn dirichlet_log_pdf(alpha: &DirichletParams, p: &[f64]) -> Result<f64> {
    if p.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: p.len() });
    }
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidProbabilityRow { row: 0, sum });
    }
    let mut value = ln_gamma(alpha.sum());
    for (&a, &x) in alpha.as_slice().iter().zip(p) {
        value += (a - 1.0) * x.ln() - ln_gamma(a);
    }
    Ok(value)
}

/// The expected value: `alpha` normalized to the simplex.
pub fn dirichlet_mean(alpha: &DirichletParams) -> Vec<f64> {
    let sum = alpha.sum();
    alpha.as_slice().iter().map(|&a| a / sum).collect()
}

/// Conjugate posterior update: componentwise `alpha + counts`.
pub fn posterior_update(alpha: &DirichletParams, counts: &[u64]) -> Result<DirichletParams> {
    if counts.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: counts.len() });
    }
    DirichletParams::new(
        alpha.as_slice().iter().zip(counts).map(|(&a, &c)| a + c as f64).collect(),
    )
}

/// One pass over the rows: `mean_log[k] = mean_n ln(data[n][k])`.
pub fn suff_stat(data: &ProbabilityMatrix) -> DirichletSuffStat {
    let k = data.k();
    let n = data.n_rows();
    let sums = parallel::map_reduce(
        n,
        |range| {
            let mut acc = vec![0.0f64; k];
            for row_idx in range {
                for (slot, &p) in acc.iter_mut().zip(data.row(row_idx)) {
                    *slot += p.ln();
                }
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![0.0; k]);
    let scale = 1.0 / n.max(1) as f64;
    DirichletSuffStat { mean_log: sums.into_iter().map(|s| s * scale).collect(), n_rows: n as u64 }
}

/// The objective: `ln_gamma(sum alpha) - sum_k ln_gamma(alpha_k) + sum_k
/// alpha_k * mean_log_k`, the per-row mean log-likelihood up to an
/// additive constant.
pub fn dirichlet_objective(stat: &DirichletSuffStat, alpha: &[f64]) -> f64 {
    assert_eq!(stat.k(), alpha.len(), "statistic/alpha dimension mismatch");
    let total: f64 = alpha.iter().sum();
    let mut value = ln_gamma(total);
    for (&a, &v) in alpha.iter().zip(&stat.mean_log) {
        value += a * v - ln_gamma(a);
    }
    value
}

/// Gradient of [`dirichlet_objective`]:
/// `g_k = digamma(sum alpha) - digamma(alpha_k) + mean_log_k`.
pub fn dirichlet_gradient(stat: &DirichletSuffStat, alpha: &[f64]) -> Vec<f64> {
    assert_eq!(stat.k(), alpha.len(), "statistic/alpha dimension mismatch");
    let dig_total = digamma(alpha.iter().sum());
    alpha.iter().zip(&stat.mean_log).map(|(&a, &v)| dig_total - digamma(a) + v).collect()
}

/// Hessian of [`dirichlet_objective`] in structured form:
/// constant `trigamma(sum alpha)`, diagonal `-trigamma(alpha_k)`.
pub fn dirichlet_hessian(alpha: &[f64]) -> StructuredHessian {
    StructuredHessian {
        diag: alpha.iter().map(|&a| -trigamma(a)).collect(),
        constant: trigamma(alpha.iter().sum()),
    }
}

/// Newton fit of a Dirichlet to the sufficient statistic.
///
/// Fails with [`Error::Diverged`] when the likelihood is unbounded (for
/// example, all rows identical) and the iterate escapes past
/// `config.alpha_cap`.
pub fn fit_dirichlet(stat: &DirichletSuffStat, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let k = stat.k();
    if k < 2 {
        return Err(Error::TooFewCategories(k));
    }
    if stat.n_rows == 0 {
        return Err(Error::NoEffectiveRows);
    }
    let init = config.initial_alpha(k)?;
    let started = std::time::Instant::now();
    let outcome = newton_fit(
        init,
        config,
        None,
        |alpha| dirichlet_gradient(stat, alpha),
        dirichlet_hessian,
        |alpha| dirichlet_objective(stat, alpha),
    )?;
    let solve = started.elapsed();
    Ok(SolverReport {
        method: config.method,
        alpha_hat: outcome.alpha,
        iterations: outcome.iterations,
        final_grad_norm: outcome.grad_norm,
        converged: outcome.converged,
        objective: outcome.objective,
        timings: Timings { precompute: Default::default(), solve },
    })
}

/// Classic method-of-moments starting point: match the first two moments of
/// the rows to the Dirichlet mean and a shared precision estimate.
pub fn moment_init(data: &ProbabilityMatrix) -> Result<DirichletParams> {
    if data.n_rows() == 0 {
        return Err(Error::NoEffectiveRows);
    }
    moment_init_from_rows(data.k(), data.rows())
}

pub(crate) fn moment_init_from_rows<R: AsRef<[f64]>>(
    k: usize,
    rows: impl IntoIterator<Item = R>,
) -> Result<DirichletParams> {
    let mut m1 = vec![0.0f64; k];
    let mut m2 = vec![0.0f64; k];
    let mut n = 0u64;
    for row in rows {
        for (j, &p) in row.as_ref().iter().enumerate() {
            m1[j] += p;
            m2[j] += p * p;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoEffectiveRows);
    }
    let scale = 1.0 / n as f64;
    for j in 0..k {
        m1[j] *= scale;
        m2[j] *= scale;
    }
    // Per-component precision estimates (E p - E p^2) / (E p^2 - (E p)^2);
    // the median guards against degenerate components.
    let mut precisions: Vec<f64> = (0..k)
        .filter_map(|j| {
            let var = m2[j] - m1[j] * m1[j];
            let s = (m1[j] - m2[j]) / var;
            (var > 0.0 && s.is_finite() && s > 0.0).then_some(s)
        })
        .collect();
    let precision = if precisions.is_empty() {
        k as f64
    } else {
        precisions.sort_by(f64::total_cmp);
        precisions[precisions.len() / 2]
    };
    DirichletParams::new(m1.into_iter().map(|m| (m * precision).max(1e-6)).collect())
}
