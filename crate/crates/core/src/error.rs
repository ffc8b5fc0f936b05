use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: malformed header {header:?} (expected `<count> <dim>`)")]
    MalformedHeader { path: PathBuf, header: String },

    #[error("{path}:{line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vector dimension mismatch: {0} vs {1}")]
    VectorDims(usize, usize),

    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,

    #[error("nearest-neighbour query over an empty candidate set")]
    EmptyCandidates,

    #[error("word {0:?} has no vector in the embedding store")]
    MissingWord(String),

    #[error("cannot compute an edit script between two empty words")]
    EmptyEditPair,

    #[error("edit script does not apply to {word:?}")]
    NotApplicable { word: String },

    #[error("invalid edit script {script:?}: {message}")]
    InvalidScript { script: String, message: String },

    #[error("lexeme {lexeme:?} has no form for bundle {bundle}")]
    MissingCell { lexeme: String, bundle: String },

    #[error("requested {requested} seed tables but only {available} complete tables exist")]
    NotEnoughTables { requested: usize, available: usize },

    #[error("paradigm schema needs at least two cells, found {0}")]
    SchemaTooSmall(usize),

    #[error("unknown feature bundle {0:?} for this schema")]
    UnknownBundle(String),

    #[error("relation ({source_cell}, {target_cell}) is unusable: {reason}")]
    UnusableRelation {
        source_cell: usize,
        target_cell: usize,
        reason: String,
    },

    #[error("bin too small for CSLS: {0} member(s), need at least 2")]
    BinTooSmall(usize),

    #[error("word {word:?} is not a member of its bin")]
    NotInBin { word: String },

    #[error("relation ({0}, {1}) is not covered by the model")]
    UnknownRelation(usize, usize),

    #[error("training dataset is empty")]
    EmptyDataset,

    #[error("evaluation input is empty")]
    EmptyInput,

    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("correlation needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("zero variance in correlation series")]
    ZeroVariance,

    #[error("invalid synthetic language spec: {0}")]
    InvalidSynthSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
