//! Experiment orchestration: corpus generation, decoding runs, and reports.
//!
//! Every artifact is a deterministic function of the config's master seed.
//! Work fans out over a rayon pool, and results are collected in utterance
//! order, so the thread count never changes an output byte.

pub mod config;
pub mod corpus;
pub mod report;
pub mod run;

pub use config::{CorpusConfig, CorruptionConfig, ExperimentConfig, RateSetting, ReportConfig, RunConfig};
pub use corpus::{build_corpus, derive_seed, generate_corpus, read_corpus, CorpusEntry};
pub use report::{build_report, report, Report};
pub use run::{process_corpus, process_entry, run_experiment, summarize, KResult, KSummary, RunMeta, UtteranceRecord};

/// Version stamped into every JSONL record and CSV row.
pub const SCHEMA_VERSION: u32 = 1;

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads == 0`.
pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
