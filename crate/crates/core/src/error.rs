use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data.
    Input,
    /// Invalid parameters or an incomplete pipeline setup.
    Config,
    /// A numerical or internal invariant failed.
    Internal,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probabilities ({p1}, {p2}) do not sum to 1 (sum = {sum})")]
    NonSimplex { p1: f64, p2: f64, sum: f64 },
    #[error("probability component {value} is outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("probability component is not finite")]
    NonFinite,
    #[error("label {0} is not a binary class index (expected 0 or 1)")]
    InvalidLabel(i64),
    #[error("invalid sample `{id}`: {reason}")]
    InvalidSample { id: String, reason: String },

    #[error("{0} variables would produce too many flip variants (maximum is 16)")]
    TooManyVariables(usize),
    #[error("flip mask has {mask} bits but the sample has {variables} variables")]
    MaskLengthMismatch { mask: usize, variables: usize },
    #[error("sample `{id}` has {found} variables, expected {expected}")]
    InconsistentVariableCount {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("prediction tensor for sample `{0}` has no runs")]
    EmptyTensor(String),
    #[error("ragged prediction runs: {0}")]
    RaggedRuns(String),
    #[error("prediction rows reference unknown sample `{0}`")]
    UnknownSample(String),
    #[error("duplicate prediction cell (sample `{sample_id}`, variant {variant}, run {run})")]
    DuplicateCell {
        sample_id: String,
        variant: usize,
        run: usize,
    },
    #[error("variant count {0} is not a power of two")]
    InvalidVariantCount(usize),
    #[error("no prediction rows for sample `{0}`")]
    MissingPredictions(String),

    #[error("beta {0} is outside (0, 0.5)")]
    InvalidBeta(f64),
    #[error("method needs at least {needed} variants, got {found}")]
    TooFewVariants { needed: usize, found: usize },
    #[error("pipeline requires a fallback model")]
    MissingFallbackModel,
    #[error("pipeline requires the original sample for `{0}`")]
    MissingOriginalSamples(String),
    #[error("beta list is empty")]
    EmptyBetaList,
    #[error("unknown pipeline `{0}`")]
    UnknownPipeline(String),

    #[error("training set contains a single class")]
    SingleClassDataset,
    #[error("training loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("external fallback has no prediction for sample `{0}`")]
    UnknownSampleForExternal(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("sample shape {found:?} does not match model shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("decision for sample `{0}` is rejected; resolve it before scoring")]
    RejectedDecisionPresent(String),
    #[error("bin width {0} does not split [0.5, 1] into whole bins")]
    InvalidBinWidth(f64),
    #[error("no samples to score")]
    NoSamples,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidBeta(_)
            | MissingFallbackModel
            | MissingOriginalSamples(_)
            | EmptyBetaList
            | UnknownPipeline(_)
            | InvalidBinWidth(_)
            | InvalidConfig(_)
            | TooManyVariables(_) => ErrorKind::Config,
            NonFiniteLoss(_) => ErrorKind::Internal,
            _ => ErrorKind::Input,
        }
    }
}
