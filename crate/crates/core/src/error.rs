use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("n_docs must be at least 1")]
    NoDocuments,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{doc}`: layer `{layer}` has {got} tag slots for {expected} tokens")]
    LayerLength {
        doc: String,
        layer: String,
        expected: usize,
        got: usize,
    },

    #[error(
        "document `{doc}`: layer set differs from the first document ({expected:?} vs {got:?})"
    )]
    LayerSet {
        doc: String,
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("layer name `{0}` is reserved for the inline token tags")]
    ReservedLayer(String),

    #[error("unknown tag layer `{0}`")]
    UnknownLayer(String),

    #[error("invalid token: {0}")]
    InvalidToken(String),

    #[error("corpus has no relevant documents")]
    NoRelevant,

    #[error("query `{0}` carries no tag")]
    MissingQueryTag(String),

    #[error("parameter `{0}` is undefined for this corpus and query")]
    Undefined(&'static str),

    #[error("no query in the workload could be evaluated")]
    EmptyEvaluation,

    #[error("workload is empty")]
    EmptyWorkload,

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("tsv cannot carry named tag layers; use jsonl")]
    TsvLayers,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
