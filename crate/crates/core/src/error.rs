use std::io;

/// A malformed input line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("{} malformed record(s); first: {}", .0.len(), .0[0])]
    Malformed(Vec<LineError>),

    #[error("duplicate id {id:?} on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("empty vocabulary: no term reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("no weight for term index {0}")]
    UnknownTerm(usize),

    #[error("vocabulary mismatch: embedding {embedding:08x}, tf-idf {tfidf:08x}")]
    VocabularyMismatch { embedding: u32, tfidf: u32 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("truncated input at byte offset {offset} while reading {context}")]
    Truncated { offset: u64, context: &'static str },

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("similarity undefined for the zero signature")]
    ZeroSignature,

    #[error("unknown item id {0:?}")]
    UnknownId(String),

    #[error("item {id:?}: {source}")]
    Item {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing year for neighbor {neighbor:?} of {focal:?}")]
    MissingYear { focal: String, neighbor: String },

    #[error("condition always true: {0}")]
    ConditionAlwaysTrue(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
