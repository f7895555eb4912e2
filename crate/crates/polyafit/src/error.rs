use thiserror::Error;

/// Errors produced by dataset construction and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected {expected} categories, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alpha[{index}] = {value} must be strictly positive and finite")]
    InvalidAlpha { index: usize, value: f64 },

    #[error("need at least 2 categories, got {0}")]
    TooFewCategories(usize),

    #[error("row {row}: entries must be in (0, 1] and sum to 1 (sum = {sum})")]
    InvalidProbabilityRow { row: usize, sum: f64 },

    #[error("tally overflow while accumulating counts")]
    TallyOverflow,

    #[error("row total {total} exceeds the addressable tally range")]
    RowTotalTooLarge { total: u64 },

    #[error("structured Hessian is singular or produced a non-finite step")]
    SingularHessian,

    #[error("diverged: max alpha {alpha:.3e} exceeded cap {cap:.3e} at iteration {iteration}")]
    Diverged { alpha: f64, cap: f64, iteration: u32 },

    #[error(
        "alpha[{component}] collapsed below {floor:.1e}; the maximum lies on the boundary \
         (category {component} is unobserved or nearly so)"
    )]
    BoundaryMle { component: usize, floor: f64 },

    #[error("fixed-point denominator is not positive")]
    DegenerateDenominator,

    #[error("dataset has no rows with a positive total")]
    NoEffectiveRows,

    #[error("method {method} requires the raw count matrix, not compressed statistics")]
    NeedsCountData { method: &'static str },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
