//! The structured Newton step shared by both solvers.
//!
//! Every Hessian in this crate is a diagonal plus a constant matrix,
//! `H = diag(d) + c * 1 1^T`, which the matrix-inversion-lemma special case
//! (Sherman-Morrison) inverts in O(K):
//!
//! ```text
//! H^{ -1} = diag(1/d) - (1/d)(1/d)^T / (1/c + sum_k 1/d_k)
//! ```

use crate::dirichlet::DirichletParams;
use crate::error::{Error, Result};

/// A Hessian of the form `diag(d) + c * 1 1^T`.
///
/// The likelihoods here always produce a negative diagonal and a positive
/// constant (though not necessarily a definite matrix); the solve itself
/// only needs `d_k != 0` and a nonzero Sherman-Morrison denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredHessian {
    /// Diagonal entries d.
    pub diag: Vec<f64>,
    /// The constant c added to every entry.
    pub constant: f64,
}

impl StructuredHessian {
    pub fn k(&self) -> usize {
        self.diag.len()
    }
}

/// Solves `(diag(d) + c * 1 1^T) delta = g` in O(K).
///
/// Fails with [`Error::SingularHessian`] when some `d_k` is zero, the
/// Sherman-Morrison denominator vanishes, or the step is non-finite.
pub fn solve_structured(h: &StructuredHessian, grad: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(h.diag.len(), grad.len(), "gradient/Hessian dimension mismatch");
    if h.diag.iter().any(|&d| d == 0.0 || !d.is_finite()) {
        return Err(Error::SingularHessian);
    }
    if h.constant == 0.0 {
        // Pure diagonal system.
        let delta: Vec<f64> = grad.iter().zip(&h.diag).map(|(&g, &d)| g / d).collect();
        if delta.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularHessian);
        }
        return Ok(delta);
    }
    let mut scaled_grad_sum = 0.0; // sum_k g_k / d_k
    let mut inv_diag_sum = 0.0; // sum_k 1 / d_k
    for (&g, &d) in grad.iter().zip(&h.diag) {
        scaled_grad_sum += g / d;
        inv_diag_sum += 1.0 / d;
    }
    let denom = 1.0 / h.constant + inv_diag_sum;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularHessian);
    }
    let correction = scaled_grad_sum / denom;
    let delta: Vec<f64> =
        grad.iter().zip(&h.diag).map(|(&g, &d)| (g - correction) / d).collect();
    if delta.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularHessian);
    }
    Ok(delta)
}

/// Outcome of a damped Newton update.
#[derive(Debug, Clone)]
pub enum Damped {
    /// The step (possibly shortened) kept every component positive and did
    /// not decrease the objective.
    Accepted {
        alpha: DirichletParams,
        objective: f64,
        /// The accepted step fraction t.
        step: f64,
    },
    /// No admissible step fraction down to 2^-30; the iterate is unchanged.
    Stalled,
}

const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;

/// Applies `alpha - t * delta` for the largest halving fraction
/// `t in {1, 1/2, 1/4, ...}` (at least 2^-30) that keeps every component
/// strictly positive and does not decrease `objective`.
///
/// `current` must be the objective value at `alpha`. Near a stationary
/// point the true objective change falls below the representable
/// resolution; changes within a few ulps of `current` count as "not a
/// decrease" so the gradient can keep contracting.
pub fn damped_update(
    alpha: &DirichletParams,
    delta: &[f64],
    current: f64,
    objective: impl Fn(&[f64]) -> f64,
) -> Damped {
    assert_eq!(alpha.len(), delta.len(), "step dimension mismatch");
    let slack = 16.0 * f64::EPSILON * current.abs().max(1.0);
    let mut t = 1.0;
    while t >= MIN_STEP {
        let candidate: Vec<f64> =
            alpha.as_slice().iter().zip(delta).map(|(&a, &d)| a - t * d).collect();
        if candidate.iter().all(|&a| a > 0.0 && a.is_finite()) {
            let value = objective(&candidate);
            if value.is_finite() && value >= current - slack {
                let alpha = DirichletParams::new(candidate)
                    .expect("positivity checked above");
                return Damped::Accepted { alpha, objective: value, step: t };
            }
        }
        t *= 0.5;
    }
    Damped::Stalled
}
