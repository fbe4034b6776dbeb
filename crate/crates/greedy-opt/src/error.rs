use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("dictionary has no atoms")]
    EmptyDictionary,

    #[error("atom {index} has norm {norm} > 1")]
    AtomNormExceedsOne { index: usize, norm: f64 },

    #[error("norm exponent p = {0} is outside [1, inf]")]
    InvalidNormExponent(f64),

    #[error("weakness parameter {value} at step {step} is outside (0, 1]")]
    InvalidWeakness { step: usize, value: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("line search direction is zero")]
    ZeroDirection,

    #[error("objective is unbounded below along the search direction")]
    UnboundedBelow,

    #[error(
        "span minimization stalled at residual {residual:.3e} \
         (tolerance {tol:.3e}) after {iterations} inner iterations"
    )]
    SpanConvergence {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("objective is flat: every sampled second difference is zero")]
    FlatObjective,

    #[error("smoothness fit needs at least two usable grid points, got {usable}")]
    FitUnderdetermined { usable: usize },

    #[error("smoothness fit exponent q = {0} is outside (1, 2]")]
    FitExponentOutOfRange(f64),

    #[error("every sample was degenerate; nothing to estimate")]
    NoUsableSamples,

    #[error("gram matrix of atoms {indices:?} is singular; the incoherence constant is infinite")]
    SingularGram { indices: Vec<usize> },

    #[error("exact incoherence enumeration needs {subsets} subsets, budget is {budget}")]
    EnumerationBudget { subsets: u128, budget: u128 },

    #[error("exact incoherence enumeration supports S <= 12, got {0}")]
    EnumerationTooLarge(usize),

    #[error("exact incoherence enumeration requires the l2 norm")]
    EnumerationNeedsL2,

    #[error("constants profile is missing `{0}`")]
    MissingConstant(&'static str),

    #[error("constants profile is inconsistent: {0}")]
    ProfileInconsistent(String),

    #[error("bound quoted at m = {m} violates K + m <= S (K = {k}, S = {s})")]
    SparsityWindow { m: usize, k: usize, s: usize },

    #[error("rate fit needs at least {needed} usable points, got {got}")]
    TooFewRatePoints { needed: usize, got: usize },

    #[error(
        "epsilon {eps:.6e} is infeasible: the K-term truncation tail has norm {tail:.6e}; \
         the smallest feasible epsilon is {tail:.6e}"
    )]
    InfeasibleEpsilon { eps: f64, tail: f64 },

    #[error("problem generation: {0}")]
    Problem(String),

    #[error("domain sampler rejected {attempts} consecutive proposals")]
    SamplerStalled { attempts: usize },

    #[error("{path}:{line}: {message}")]
    ConfigParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_iteration(self, iteration: usize) -> Error {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
