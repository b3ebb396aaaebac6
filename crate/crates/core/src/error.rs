use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet must contain at least one point")]
    EmptyAlphabet,

    #[error("duplicate label `{0}` in alphabet")]
    DuplicateLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("non-finite weight at index {index}")]
    NonFiniteWeight { index: usize },

    #[error("weights have zero total mass")]
    ZeroTotalMass,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operands live on different alphabets")]
    AlphabetMismatch,

    #[error("mixing weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("unknown model index {0}")]
    UnknownModel(usize),

    #[error("negative or NaN loss {value} for model {model} at point {point}")]
    InvalidLoss { model: usize, point: usize, value: f64 },

    #[error("dataset must contain at least one entry")]
    EmptyDataset,

    #[error("infinite loss for model {model} at support point {point}")]
    InfiniteLoss { model: usize, point: usize },

    #[error("log-partition is infinite at beta = {beta}")]
    InfeasibleTemperature { beta: f64 },

    #[error("beta must be a positive finite real, got {0}")]
    NonPositiveBeta(f64),

    #[error("lambda must be a positive finite real, got {0}")]
    NonPositiveLambda(f64),

    #[error("relative-entropy budget must be a nonnegative finite real, got {0}")]
    NegativeGamma(f64),

    #[error("budget gamma = {gamma} is not below the feasible supremum {sup}")]
    GammaInfeasible { gamma: f64, sup: f64 },

    #[error("loss is constant on the reference support; only gamma = 0 is feasible (got {gamma})")]
    ConstantLossNonzeroGamma { gamma: f64 },

    #[error("beta solver did not converge: {0}")]
    NonConvergence(String),

    #[error("tilt was solved for model {found}, but model {expected} was requested")]
    ModelMismatch { expected: usize, found: usize },

    #[error("operation requires a finite beta")]
    DegenerateBeta,

    #[error("measure is not absolutely continuous: point {point} has positive mass but the reference gives it zero")]
    NotAbsContinuous { point: usize },

    #[error("enumeration of {required} datasets exceeds the cap of {cap}")]
    EnumerationCapExceeded { required: u128, cap: u64 },

    #[error("lautum information is infinite: a conditional misses marginal support point {model}")]
    InfiniteLautum { model: usize },

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
