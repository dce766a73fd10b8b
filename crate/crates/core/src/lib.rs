//! Hybrid decoding: a cheap draft hypothesis is checked by an expensive
//! autoregressive verifier in one teacher-forced pass and patched only where
//! the two disagree.
//!
//! - [`types`]: vocabulary, token sequences, traces and cost accounting.
//! - [`models`]: verifier and draft interfaces with deterministic toy models.
//! - [`hybrid`]: the decoding loop and its building blocks.
//! - [`metrics`]: edit distance / WER, step ratios, histograms.
//! - [`harness`]: corpus generation, experiment runs and reports.

pub mod error;
pub mod harness;
pub mod hybrid;
pub mod metrics;
pub mod models;
pub mod types;

pub use error::{HarnessError, HybridError, MetricsError, ModelError, SeqError};
pub use hybrid::{
    append_continuation, apply_patch, find_patch_range, first_divergence, generate_patch, hybrid_decode,
    hybrid_decode_from, hybrid_decode_with_baseline, Continuation, HybridConfig, HybridOutcome, PatchEnd,
    PatchResult,
};
pub use metrics::{bin_costs_by_length, bin_ratios, edit_distance, step_ratio, EditStats, RatioHistogram};
pub use models::{
    build_ngram_model, corrupt_draft, greedy_decode, AnyModel, CorruptedGreedyDraft, CorruptionSpec, Draft, DraftGenerator, FixedDraft,
    GreedyOutput, ModelSpec, NGramModel, RepairRule, RepeaterModel, ScriptedModel, TeacherForced,
    VerifierModel,
};
pub use types::{ExitPath, HybridTrace, Step, StepCostModel, TokenId, TokenSeq, Vocab, DEFAULT_L_CAP};
