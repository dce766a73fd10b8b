//! Vocabulary, token sequences, and per-decode accounting shared by every
//! other module.
//!
//! End-of-sentence is never stored inside a [`TokenSeq`]. Anything that
//! "produces eos" reports it through [`Step::Eos`] or an [`ExitPath`].

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::SeqError;

/// Token identifier. Ordinary tokens live in `[0, vocab.size)`.
pub type TokenId = u32;

/// Default bound on every sequence handled by the decoders.
pub const DEFAULT_L_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vocab {
    size: u32,
}

impl Vocab {
    pub fn new(size: u32) -> Result<Self, SeqError> {
        if size < 2 {
            return Err(SeqError::VocabTooSmall(size));
        }
        Ok(Self { size })
    }

    /// Number of ordinary (non-eos) tokens.
    pub fn size(&self) -> u32 {
        self.size
    }

    /// The reserved end-of-sentence id, one past the last ordinary id.
    pub fn eos_id(&self) -> TokenId {
        self.size
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token < self.size
    }
}

/// One decoder output: either a content token or the end-of-sentence signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Token(TokenId),
    Eos,
}

impl Step {
    pub fn token(self) -> Option<TokenId> {
        match self {
            Step::Token(t) => Some(t),
            Step::Eos => None,
        }
    }

    pub fn is_eos(self) -> bool {
        matches!(self, Step::Eos)
    }

    /// True iff this step is the content token `token`. Eos never matches.
    pub fn matches(self, token: TokenId) -> bool {
        self == Step::Token(token)
    }
}

/// Ordered content tokens: drafts, references, patches, and outputs.
///
/// `TokenSeq::new` validates against a vocabulary and length cap. The
/// `From<Vec<TokenId>>` conversion is unchecked; decoders validate their
/// inputs at the API boundary with [`TokenSeq::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<TokenId>);

impl TokenSeq {
    pub fn new(tokens: Vec<TokenId>, vocab: &Vocab, l_cap: usize) -> Result<Self, SeqError> {
        let seq = Self(tokens);
        seq.validate(vocab, l_cap)?;
        Ok(seq)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn validate(&self, vocab: &Vocab, l_cap: usize) -> Result<(), SeqError> {
        if self.0.len() > l_cap {
            return Err(SeqError::TooLong {
                len: self.0.len(),
                l_cap,
            });
        }
        for (position, &token) in self.0.iter().enumerate() {
            if token == vocab.eos_id() {
                return Err(SeqError::ContainsEos { position });
            }
            if !vocab.contains(token) {
                return Err(SeqError::OutOfVocab {
                    position,
                    token,
                    size: vocab.size(),
                });
            }
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<TokenId> {
        self.0
    }

    pub fn push(&mut self, token: TokenId) {
        self.0.push(token);
    }

    pub fn is_prefix_of(&self, other: &[TokenId]) -> bool {
        other.starts_with(&self.0)
    }
}

impl Deref for TokenSeq {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(tokens: Vec<TokenId>) -> Self {
        Self(tokens)
    }
}

impl From<&[TokenId]> for TokenSeq {
    fn from(tokens: &[TokenId]) -> Self {
        Self(tokens.to_vec())
    }
}

impl FromIterator<TokenId> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

/// How a hybrid decode returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitPath {
    /// A teacher-forced pass matched the whole reference and predicted eos.
    EosConfirmed,
    /// The append branch produced eos within its budget (not re-verified).
    AppendedEos,
    /// The append branch spent its whole budget without eos.
    AppendedTruncated,
}

impl ExitPath {
    pub const ALL: [ExitPath; 3] = [
        ExitPath::EosConfirmed,
        ExitPath::AppendedEos,
        ExitPath::AppendedTruncated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExitPath::EosConfirmed => "eos_confirmed",
            ExitPath::AppendedEos => "appended_eos",
            ExitPath::AppendedTruncated => "appended_truncated",
        }
    }
}

impl fmt::Display for ExitPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-decode accounting of verifier work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridTrace {
    /// Teacher-forced passes; one per loop iteration.
    pub verify_passes: usize,
    /// Single-token verifier invocations (patch, append, and eos steps).
    pub ar_steps: usize,
    /// Cost reported by the draft generator.
    pub draft_steps: usize,
    pub iterations: usize,
    /// First-divergence index observed in each iteration.
    pub divergence_indices: Vec<usize>,
    pub exit_path: ExitPath,
    /// Steps a plain greedy decode of the same verifier takes
    /// (`|output| + 1` when it terminates).
    pub baseline_steps: usize,
}

impl HybridTrace {
    /// Checks the structural invariants for a decode run with budget `budget`.
    pub fn check_invariants(&self, budget: usize) -> Result<(), String> {
        if self.verify_passes != self.iterations {
            return Err(format!(
                "verify_passes {} != iterations {}",
                self.verify_passes, self.iterations
            ));
        }
        if self.ar_steps > self.iterations * budget + budget {
            return Err(format!(
                "ar_steps {} exceeds iterations*K + K = {}",
                self.ar_steps,
                self.iterations * budget + budget
            ));
        }
        if self.divergence_indices.len() != self.iterations {
            return Err(format!(
                "{} divergence indices for {} iterations",
                self.divergence_indices.len(),
                self.iterations
            ));
        }
        if self.divergence_indices.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!(
                "divergence indices decrease: {:?}",
                self.divergence_indices
            ));
        }
        Ok(())
    }
}

/// Cost units charged per decoder invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepCostModel {
    pub verify_pass_cost: f64,
    pub ar_step_cost: f64,
    pub draft_step_cost: f64,
}

impl Default for StepCostModel {
    fn default() -> Self {
        Self {
            verify_pass_cost: 1.0,
            ar_step_cost: 1.0,
            draft_step_cost: 0.0,
        }
    }
}

impl StepCostModel {
    pub fn validate(&self) -> Result<(), SeqError> {
        for (name, value) in [
            ("verify_pass_cost", self.verify_pass_cost),
            ("ar_step_cost", self.ar_step_cost),
            ("draft_step_cost", self.draft_step_cost),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SeqError::InvalidCost { name, value });
            }
        }
        Ok(())
    }

    /// Verifier cost of a hybrid decode.
    pub fn transformer_cost(&self, trace: &HybridTrace) -> f64 {
        trace.verify_passes as f64 * self.verify_pass_cost + trace.ar_steps as f64 * self.ar_step_cost
    }

    /// Verifier plus draft cost of a hybrid decode.
    pub fn total_cost(&self, trace: &HybridTrace) -> f64 {
        self.transformer_cost(trace) + trace.draft_steps as f64 * self.draft_step_cost
    }

    pub fn baseline_cost(&self, baseline_steps: usize) -> f64 {
        baseline_steps as f64 * self.ar_step_cost
    }
}
