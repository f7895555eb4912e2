//! Solver configuration, fit reports, and the iteration drivers shared by
//! the Dirichlet and Dirichlet-multinomial fits.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::dirichlet::DirichletParams;
use crate::error::{Error, Result};
use crate::newton::{damped_update, solve_structured, Damped, StructuredHessian};

/// Which fitting algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Newton-Raphson on the compressed tallies (the default).
    NewtonCompressed,
    /// Multiplicative fixed-point iteration on the compressed tallies.
    FpCompressed,
    /// Fixed-point iteration with digamma row sums over the raw data.
    FpNaive,
    /// Newton-Raphson with digamma/trigamma row sums over the raw data.
    NewtonNaive,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::NewtonCompressed, Method::FpCompressed, Method::FpNaive, Method::NewtonNaive];

    pub fn name(self) -> &'static str {
        match self {
            Method::NewtonCompressed => "newton-compressed",
            Method::FpCompressed => "fp-compressed",
            Method::FpNaive => "fp-naive",
            Method::NewtonNaive => "newton-naive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Starting point for the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// alpha_k = 1 for all k; the documented reproducible default.
    AllOnes,
    /// A caller-supplied starting vector (for example a method-of-moments
    /// estimate; see `dm::moment_init`).
    Custom(Vec<f64>),
}

/// Tolerances and limits for a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Convergence threshold on the gradient infinity norm.
    pub tol: f64,
    pub max_iters: u32,
    pub init: Init,
    /// Any component growing past this triggers a divergence error instead
    /// of looping on an unbounded likelihood.
    pub alpha_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::NewtonCompressed,
            tol: 1e-10,
            max_iters: 1000,
            init: Init::AllOnes,
            alpha_cap: 1e7,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.alpha_cap > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_cap must be positive, got {}",
                self.alpha_cap
            )));
        }
        Ok(())
    }

    pub(crate) fn initial_alpha(&self, k: usize) -> Result<DirichletParams> {
        match &self.init {
            Init::AllOnes => DirichletParams::new(vec![1.0; k]),
            Init::Custom(v) => {
                if v.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: v.len() });
                }
                DirichletParams::new(v.clone())
            }
        }
    }
}

/// Wall-clock split between the one-time data pass and the iteration loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timings {
    /// Building the compressed tallies (zero when they were supplied).
    pub precompute: Duration,
    /// The iteration loop itself.
    pub solve: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.precompute + self.solve
    }
}

/// The result of a fit.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub method: Method,
    pub alpha_hat: DirichletParams,
    /// Number of update steps applied.
    pub iterations: u32,
    /// Gradient infinity norm at `alpha_hat`.
    pub final_grad_norm: f64,
    /// True iff `final_grad_norm <= tol`.
    pub converged: bool,
    /// Objective value at `alpha_hat`.
    pub objective: f64,
    pub timings: Timings,
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

pub(crate) struct FitOutcome {
    pub alpha: DirichletParams,
    pub iterations: u32,
    pub grad_norm: f64,
    pub converged: bool,
    pub objective: f64,
}

/// Damped Newton ascent until the gradient infinity norm reaches `tol`.
///
/// `floor`, when set, turns a component collapsing toward zero into a
/// boundary diagnostic instead of a silent underflow loop.
pub(crate) fn newton_fit(
    init: DirichletParams,
    config: &SolverConfig,
    floor: Option<f64>,
    gradient: impl Fn(&[f64]) -> Vec<f64>,
    hessian: impl Fn(&[f64]) -> StructuredHessian,
    objective: impl Fn(&[f64]) -> f64,
) -> Result<FitOutcome> {
    let mut alpha = init;
    let mut current = objective(alpha.as_slice());
    let mut iterations = 0u32;
    loop {
        let grad = gradient(alpha.as_slice());
        let grad_norm = inf_norm(&grad);
        let converged = grad_norm <= config.tol;
        if converged || iterations >= config.max_iters {
            return Ok(FitOutcome { alpha, iterations, grad_norm, converged, objective: current });
        }
        let hess = hessian(alpha.as_slice());
        debug_assert!(
            hess.diag.iter().all(|&d| d < 0.0) && hess.constant > 0.0,
            "MLE Hessian should have a negative diagonal and positive constant"
        );
        let delta = solve_structured(&hess, &grad)?;
        let step = match damped_update(&alpha, &delta, current, &objective) {
            Damped::Stalled => {
                // Far from the optimum the Hessian can be indefinite and
                // the Newton direction points downhill; fall back to
                // steepest ascent, which always admits a step while the
                // gradient is nonzero.
                let ascent: Vec<f64> = grad.iter().map(|&g| -g).collect();
                damped_update(&alpha, &ascent, current, &objective)
            }
            accepted => accepted,
        };
        match step {
            Damped::Accepted { alpha: next, objective: value, .. } => {
                alpha = next;
                current = value;
            }
            Damped::Stalled => {
                // No admissible step in either direction; report honestly
                // rather than spin.
                return Ok(FitOutcome {
                    alpha,
                    iterations,
                    grad_norm,
                    converged: false,
                    objective: current,
                });
            }
        }
        iterations += 1;
        check_bounds(&alpha, config, floor, iterations)?;
    }
}

/// Multiplicative fixed-point ascent. `terms` returns the per-component
/// numerator vector and the shared denominator; the gradient is their
/// difference and the update is `alpha_k * num_k / den`.
pub(crate) fn fixed_point_fit(
    init: DirichletParams,
    config: &SolverConfig,
    floor: Option<f64>,
    terms: impl Fn(&[f64]) -> (Vec<f64>, f64),
    objective: impl Fn(&[f64]) -> f64,
) -> Result<FitOutcome> {
    let mut alpha = init;
    let mut iterations = 0u32;
    loop {
        let (num, den) = terms(alpha.as_slice());
        if !(den > 0.0) || !den.is_finite() {
            return Err(Error::DegenerateDenominator);
        }
        let grad_norm = num.iter().fold(0.0f64, |m, &n| m.max((n - den).abs()));
        let converged = grad_norm <= config.tol;
        if converged || iterations >= config.max_iters {
            let objective = objective(alpha.as_slice());
            return Ok(FitOutcome { alpha, iterations, grad_norm, converged, objective });
        }
        let next: Vec<f64> =
            alpha.as_slice().iter().zip(&num).map(|(&a, &n)| a * n / den).collect();
        if let Some(component) = next.iter().position(|&a| !(a > 0.0) || !a.is_finite()) {
            // A zero numerator collapses that component in one update.
            return Err(Error::BoundaryMle { component, floor: floor.unwrap_or(0.0) });
        }
        alpha = DirichletParams::new(next)?;
        iterations += 1;
        check_bounds(&alpha, config, floor, iterations)?;
    }
}

fn check_bounds(
    alpha: &DirichletParams,
    config: &SolverConfig,
    floor: Option<f64>,
    iteration: u32,
) -> Result<()> {
    let slice = alpha.as_slice();
    let max = slice.iter().fold(0.0f64, |m, &a| m.max(a));
    if max > config.alpha_cap {
        return Err(Error::Diverged { alpha: max, cap: config.alpha_cap, iteration });
    }
    if let Some(floor) = floor {
        if let Some(component) = slice.iter().position(|&a| a <= floor) {
            return Err(Error::BoundaryMle { component, floor });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tol = 1e-8;
        cfg.max_iters = 0;
        assert!(cfg.validate().is_err());
        cfg.max_iters = 5;
        cfg.alpha_cap = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn custom_init_dimension_check() {
        let cfg = SolverConfig { init: Init::Custom(vec![1.0, 2.0]), ..Default::default() };
        assert!(cfg.initial_alpha(3).is_err());
        assert_eq!(cfg.initial_alpha(2).unwrap().as_slice(), &[1.0, 2.0]);
    }
}
