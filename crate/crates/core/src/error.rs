use thiserror::Error;

/// Errors raised by tiling construction, function sampling and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dilation matrix is not expanding (smallest eigenvalue modulus {0})")]
    NotExpanding(f64),
    #[error("malformed matrix: {0}")]
    BadMatrix(String),
    #[error("digit set has {got} digits but |det M| = {expected}")]
    WrongCount { expected: u64, got: usize },
    #[error("digits #{0} and #{1} are congruent modulo M")]
    DuplicateResidue(usize, usize),
    #[error("{requested} points exceed the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u64 },
    #[error("point not located at level {level}: {reason}")]
    NotLocated { level: usize, reason: String },
    #[error("series depth {depth} exceeds grid level {level}")]
    DepthExceedsGrid { depth: usize, level: usize },
    #[error("wrong dilation: {0}")]
    WrongDilation(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in row {0}")]
    NonFiniteValue(usize),
    #[error("rank deficient fit: {samples} samples for {basis} basis functions")]
    RankDeficient { samples: usize, basis: usize },
    #[error("no admissible difference step at level {0}")]
    EmptyStepSet(usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("level {level} is beyond the Nyquist limit of the grid")]
    LevelBeyondNyquist { level: usize },
    #[error("generator set is unstable: smallest Gram eigenvalue {0:e}")]
    Unstable(f64),
    #[error("generator set is not refinable: residual {0:e}")]
    NotRefinable(f64),
    #[error("level {level} is too fine for a level-{grid_level} grid")]
    LevelTooFine { level: usize, grid_level: usize },
    #[error("wrong generator: {0}")]
    WrongGenerator(String),
    #[error("only {0} usable levels in the regression window (need at least 4)")]
    InsufficientLevels(usize),
    #[error("point lies on a cell boundary at level {0}")]
    DegenerateBoundaryDistance(usize),
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Config(_) => ErrorClass::Config,
            Io(_) | Csv(_) | Json(_) => ErrorClass::Io,
            NotExpanding(_) | BadMatrix(_) | WrongCount { .. } | DuplicateResidue(..)
            | BudgetExceeded { .. } | DepthExceedsGrid { .. } | WrongDilation(_)
            | ShapeMismatch(_) | NonFiniteValue(_) | BadParameters(_) | LevelTooFine { .. }
            | WrongGenerator(_) | UnsupportedProfile(_) | LevelBeyondNyquist { .. } => {
                ErrorClass::Validation
            }
            NotLocated { .. } | RankDeficient { .. } | EmptyStepSet(_) | Unstable(_)
            | NotRefinable(_) | InsufficientLevels(_) | DegenerateBoundaryDistance(_) => {
                ErrorClass::Numerical
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
