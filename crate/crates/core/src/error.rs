use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Error {
    #[error("matrix is not unitary (max |U†U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max |H - H†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix must be square with dimension {expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ion index must be 1 or 2, got {0}")]
    InvalidIon(usize),

    #[error("non-finite angle in gate {index}")]
    NonFiniteAngle { index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ideal state is not separable (marginal purity {purity:.12})")]
    NotSeparable { purity: f64 },

    #[error("recovery requires an even number of entangling gates, found {0}")]
    OddEntanglerCount(usize),

    #[error("ion {ion} marginal ({x:.6}, {y:.6}, {z:.6}) cannot be mapped to +Z with the recovery alphabet")]
    UnreachableMarginal { ion: usize, x: f64, y: f64, z: f64 },

    #[error("cross-talk sequences need an even pulse count, got {0}")]
    OddPulseCount(usize),

    #[error("missing result for basis {basis}, m = {m}, l = {l}")]
    MissingResult { basis: String, m: usize, l: usize },

    #[error("every basis term has a vanishing m1 population; fidelity undefined")]
    DegenerateEstimate,

    #[error("no zero crossing with {slope} slope")]
    NoCrossing { slope: &'static str },

    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Error, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitError {
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("data series lengths differ ({0})")]
    LengthMismatch(String),

    #[error("uncertainty at index {index} must be positive, got {value}")]
    NonPositiveSigma { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{name}[{index}] = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        index: usize,
        value: f64,
        domain: &'static str,
    },

    #[error("normal matrix is singular; degenerate parameters: {}", params.join(", "))]
    Singular { params: Vec<String> },
}
