//! Synthetic corpus: one seeded n-gram verifier plus a corruption recipe per
//! utterance.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{with_pool, SCHEMA_VERSION};
use crate::error::HarnessError;
use crate::models::{build_ngram_model, greedy_decode, hash_words, CorruptionSpec, ModelSpec};
use crate::types::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub schema_version: u32,
    pub utterance_id: u64,
    /// Derived from the master seed and the utterance id only.
    pub seed: u64,
    pub model: ModelSpec,
    pub corruption: CorruptionSpec,
    pub greedy_len: usize,
    /// Model seeds drawn before one met the length target.
    pub attempts: usize,
}

/// Stable per-utterance seed; independent of scheduling order.
pub fn derive_seed(master_seed: u64, utterance_id: u64) -> u64 {
    hash_words(master_seed, [utterance_id])
}

/// Draws one corpus entry. Model seeds are redrawn until the greedy decode
/// terminates with a length inside `[min_len, max_len]`.
pub fn generate_entry(config: &ExperimentConfig, utterance_id: u64) -> Result<CorpusEntry, HarnessError> {
    let c = &config.corpus;
    let seed = derive_seed(config.master_seed, utterance_id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocab::new(c.vocab_size)?;

    let mut accepted = None;
    for attempt in 1..=c.max_attempts {
        let model_seed = rng.next_u64();
        let model = build_ngram_model(vocab, c.ngram_order, c.eos_bias, model_seed)?;
        let greedy = greedy_decode(&model, config.run.l_cap);
        let len = greedy.output.len();
        if greedy.terminated && (c.min_len..=c.max_len).contains(&len) {
            accepted = Some((model, len, attempt));
            break;
        }
    }
    let Some((model, greedy_len, attempts)) = accepted else {
        return Err(HarnessError::Corpus {
            utterance_id,
            message: format!(
                "no model met the length target [{}, {}] in {} attempts",
                c.min_len, c.max_len, c.max_attempts
            ),
        });
    };

    let corruption = CorruptionSpec::new(
        config.corruption.sub_rate.sample(rng.random()),
        config.corruption.ins_rate.sample(rng.random()),
        config.corruption.del_rate.sample(rng.random()),
        rng.next_u64(),
    )?;

    Ok(CorpusEntry {
        schema_version: SCHEMA_VERSION,
        utterance_id,
        seed,
        model: ModelSpec::from(&model),
        corruption,
        greedy_len,
        attempts,
    })
}

/// Builds the whole corpus in memory, ordered by utterance id.
pub fn build_corpus(config: &ExperimentConfig) -> Result<Vec<CorpusEntry>, HarnessError> {
    config.validate()?;
    with_pool(config.run.threads, || {
        (0..config.corpus.n_utterances as u64)
            .into_par_iter()
            .map(|id| generate_entry(config, id))
            .collect()
    })
}

/// Writes the corpus as JSONL, one entry per line.
pub fn generate_corpus(config: &ExperimentConfig, out: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    let entries = build_corpus(config)?;
    write_jsonl(out, &entries)?;
    Ok(entries)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    read_jsonl(path)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut items = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}
