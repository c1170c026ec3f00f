//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Errors carry the
//! quantitative evidence that triggered them (residuals, eigenvalues, step
//! indices) so that callers — in particular the CLI — can report *why* a run
//! failed, not just that it did.

use thiserror::Error;

/// Errors produced by grid construction, transport solvers, the proximal
/// stepper, and the inequality checkers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input (dimensions, lengths, parameter ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two fields or measures that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Source and target measures carry different total mass.
    #[error("unbalanced measures: total masses differ by {gap:e}")]
    Unbalanced { gap: f64 },

    /// An exact-solver path was asked to handle more atoms than it enumerates.
    #[error("instance too large: {atoms} atoms exceeds the exact-solver limit of {limit}")]
    InstanceTooLarge { atoms: usize, limit: usize },

    /// A Gibbs kernel row underflowed to zero in dense scaling mode.
    #[error(
        "kernel underflow: every entry of a Gibbs kernel row vanished at eps = {eps:e}; \
         raise the terminal eps or use log-domain mode"
    )]
    KernelUnderflow { eps: f64 },

    /// An iterative solver stopped on its iteration cap, not its tolerance.
    #[error(
        "no convergence after {iterations} iterations: residual {residual:e} \
         exceeds tolerance {tolerance:e}"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// I + τ∇²log ρ is singular or indefinite somewhere, so the displacement
    /// map folds; the step size τ is too large for this density.
    #[error(
        "degenerate map: I + tau*Hess(log rho) has minimum eigenvalue {min_eig:e} \
         at node {node}; tau is too large for this density"
    )]
    DegenerateMap { node: usize, min_eig: f64 },

    /// The forward-map Jacobian loses positive definiteness, so the change of
    /// variables behind the mass-balance residual is invalid.
    #[error(
        "map not orientation-preserving: I + tau*Hess(log rho_next) has minimum \
         eigenvalue {min_eig:e} at node {node}"
    )]
    MapNotOrientationPreserving { node: usize, min_eig: f64 },

    /// I − τ∇²f lost positive definiteness, so the potential does not encode a
    /// well-defined optimal displacement.
    #[error(
        "degenerate potential: I - tau*Hess(f) has minimum eigenvalue {min_eig:e} \
         at node {node}"
    )]
    DegeneratePotential { node: usize, min_eig: f64 },

    /// A produced density dropped below the positivity floor.
    #[error(
        "positivity lost: density fell to {min_value:e} at node {node}; \
         eps is too small or tau too large relative to the grid"
    )]
    PositivityLost { node: usize, min_value: f64 },

    /// The Hessian-bound recursion left its domain of validity: 1 + τ a_k ≤ 0.
    #[error(
        "positivity (pos) violated at step {k}: 1 + tau*a_k = {value:e} <= 0; \
         the recursion is invalid for the whole run"
    )]
    PositivityViolated { k: usize, value: f64 },

    /// The fixed-point threshold (1−C)²/(2C−1) needs C > ½.
    #[error("threshold undefined: C = {c} is <= 1/2, so 2C - 1 does not divide")]
    ThresholdUndefined { c: f64 },

    /// A two-time comparison was requested but no sampled pair satisfies the
    /// admissibility constraints t1 ≥ τ and t2 − t1 − τ > 0.
    #[error("no admissible pairs: every sampled (t1, t2) violates t1 >= tau or t2 - t1 - tau > 0")]
    NoAdmissiblePairs,

    /// A trajectory step failed; wraps the underlying error with its index.
    #[error("step {k} failed: {source}")]
    StepFailed {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    /// Filesystem failure while reading or writing artifacts.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the index of the trajectory step that produced it.
    pub fn at_step(self, k: usize) -> Self {
        Error::StepFailed {
            k,
            source: Box::new(self),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
