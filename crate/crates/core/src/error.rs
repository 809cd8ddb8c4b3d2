use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}, column {column}: cannot parse {text:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        text: String,
    },

    #[error("input is not rectangular: line {line} has {found} fields, expected {expected}")]
    NotRectangular {
        line: usize,
        found: usize,
        expected: usize,
    },

    #[error("triangle must be square: {accident_years} accident years but {development_years} development years")]
    NotSquare {
        accident_years: usize,
        development_years: usize,
    },

    #[error("cell ({i}, {j}) {problem}")]
    BadMask { i: usize, j: usize, problem: &'static str },

    #[error("cell ({i}, {j}) must be strictly positive, got {value}")]
    NonPositive { i: usize, j: usize, value: f64 },

    #[error("degenerate triangle: {0}")]
    Degenerate(String),

    #[error("tail variance rule needs at least 3 development periods, got {0}")]
    TailRuleTooShort(usize),

    #[error("tail variance rule divides by zero: variance at development period {0} is 0")]
    TailRuleZero(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no positive value for cell ({i}, {j}) after {attempts} residual draws")]
    PositivityExhausted { i: usize, j: usize, attempts: usize },

    #[error("weight matrix is singular: {0}")]
    SingularWeights(String),

    #[error("chain stuck: coordinate {coordinate} rejected {rejections} consecutive proposals (iteration {iteration})")]
    ChainStuck {
        coordinate: usize,
        iteration: usize,
        rejections: usize,
    },

    #[error("rejection sampler accepted none of {draws} draws at tolerance {tolerance}")]
    NoAcceptances { draws: usize, tolerance: f64 },

    #[error("sequence too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("sequence is constant; statistic undefined")]
    ConstantSequence,

    #[error("empty sample: {0}")]
    Empty(&'static str),
}
