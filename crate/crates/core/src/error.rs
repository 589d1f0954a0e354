use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("node index {index} out of range (grid has {len} nodes)")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),

    #[error("duplicate stimulus `{0}`")]
    DuplicateStimulus(String),

    #[error("negative time step {0}")]
    NegativeTimeStep(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("scenario syntax error at line {line}, column {column}: {message}")]
    ScenarioSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("unsupported snapshot version {found} (expected {expected})")]
    SnapshotVersion { found: u32, expected: u32 },

    #[error("snapshot does not match the running configuration: {0}")]
    SnapshotMismatch(String),

    #[error("bumps are not separable: {0}")]
    Unmeasurable(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
