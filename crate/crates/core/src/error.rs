use std::path::PathBuf;

use thiserror::Error;

use crate::types::TokenId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("vocabulary needs at least 2 ordinary tokens, got {0}")]
    VocabTooSmall(u32),
    #[error("sequence contains eos at position {position}")]
    ContainsEos { position: usize },
    #[error("token {token} at position {position} is outside vocabulary of size {size}")]
    OutOfVocab {
        position: usize,
        token: TokenId,
        size: u32,
    },
    #[error("sequence length {len} exceeds cap {l_cap}")]
    TooLong { len: usize, l_cap: usize },
    #[error("cost `{name}` must be finite and non-negative, got {value}")]
    InvalidCost { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("eos bias must lie in [0, 1], got {0}")]
    InvalidEosBias(f64),
    #[error("corruption rate `{name}` must lie in [0, 1], got {value}")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("repeated token {token} is not an ordinary token of a size-{size} vocabulary")]
    InvalidRepeatToken { token: TokenId, size: u32 },
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HybridError {
    #[error("reference has {reference} tokens but prediction has {predicted}")]
    LengthMismatch { reference: usize, predicted: usize },
    #[error("divergence index {index} out of bounds for reference of length {len}")]
    DivergenceOutOfBounds { index: usize, len: usize },
    #[error("patch range {start}..={end} invalid for reference of length {len}")]
    InvalidRange { start: usize, end: usize, len: usize },
    #[error("empty patch without eos cannot be placed")]
    EmptyPatch,
    #[error("decoded sequence would reach {len} tokens, cap is {l_cap}")]
    Overflow { len: usize, l_cap: usize },
    #[error("hybrid loop exceeded {0} iterations")]
    NonTermination(usize),
    #[error("patch budget K must be at least 1")]
    ZeroBudget,
    #[error("iteration cap must be at least 1")]
    ZeroIterationCap,
    #[error("invalid draft: {0}")]
    InvalidDraft(#[from] SeqError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("baseline step count is zero; ratio undefined")]
    ZeroBaseline,
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(f64),
    #[error("ratio must be finite and non-negative, got {0}")]
    InvalidRatio(f64),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("utterance {utterance_id}: {source}")]
    Decode {
        utterance_id: u64,
        #[source]
        source: HybridError,
    },
    #[error("utterance {utterance_id}: {message}")]
    Corpus { utterance_id: u64, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
