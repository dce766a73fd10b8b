//! Runs greedy, draft and hybrid decoding over a corpus.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReportConfig};
use super::corpus::{read_corpus, write_jsonl, CorpusEntry};
use super::{with_pool, SCHEMA_VERSION};
use crate::error::HarnessError;
use crate::hybrid::{hybrid_decode_with_baseline, HybridConfig, HybridOutcome};
use crate::metrics::{edit_distance, step_ratio, write_rows, EditStats};
use crate::models::{greedy_decode, CorruptedGreedyDraft, DraftGenerator, ModelSpec, VerifierModel};
use crate::types::{ExitPath, StepCostModel, TokenId};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const UTTERANCES_FILE: &str = "utterances.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const META_FILE: &str = "run_meta.json";

/// One hybrid decode at a given budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KResult {
    pub k: usize,
    #[serde(flatten)]
    pub outcome: HybridOutcome,
    pub transformer_cost: f64,
    pub step_ratio: f64,
    pub wer_vs_greedy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub schema_version: u32,
    pub utterance_id: u64,
    pub model: ModelSpec,
    pub greedy: Vec<TokenId>,
    pub greedy_terminated: bool,
    pub baseline_steps: usize,
    pub draft: Vec<TokenId>,
    pub draft_steps: usize,
    pub draft_edits: EditStats,
    pub results: Vec<KResult>,
}

impl UtteranceRecord {
    pub fn result(&self, k: usize) -> Option<&KResult> {
        self.results.iter().find(|r| r.k == k)
    }
}

/// Parameters `report` needs that are not recoverable from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema_version: u32,
    pub master_seed: u64,
    pub k_values: Vec<usize>,
    pub cost: StepCostModel,
    pub report: ReportConfig,
}

impl Default for RunMeta {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed: 0,
            k_values: Vec::new(),
            cost: StepCostModel::default(),
            report: ReportConfig::default(),
        }
    }
}

/// Aggregate over all utterances for one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub schema_version: u32,
    pub k: usize,
    pub utterances: usize,
    pub mean_draft_wer: f64,
    pub mean_hybrid_wer: f64,
    pub mean_baseline_steps: f64,
    pub mean_transformer_steps: f64,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub eos_confirmed: usize,
    pub appended_eos: usize,
    pub appended_truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct UtteranceRow {
    schema_version: u32,
    utterance_id: u64,
    k: usize,
    greedy_len: usize,
    draft_len: usize,
    output_len: usize,
    exit_path: ExitPath,
    iterations: usize,
    verify_passes: usize,
    ar_steps: usize,
    baseline_steps: usize,
    transformer_cost: f64,
    step_ratio: f64,
    draft_wer: f64,
    hybrid_wer: f64,
}

/// Greedy baseline, draft, and one hybrid decode per budget for one entry.
pub fn process_entry(
    entry: &CorpusEntry,
    k_values: &[usize],
    l_cap: usize,
    cost: &StepCostModel,
) -> Result<UtteranceRecord, HarnessError> {
    let id = entry.utterance_id;
    let model = entry.model.build()?;
    let greedy = greedy_decode(&model, l_cap);
    let draft = CorruptedGreedyDraft {
        clean: greedy.output.clone(),
        corruption: entry.corruption,
        vocab: model.vocab(),
    }
    .draft();
    let draft_edits = edit_distance(&greedy.output, &draft.tokens);

    let results = k_values
        .iter()
        .map(|&k| {
            let config = HybridConfig::with_l_cap(k, l_cap);
            let mut outcome = hybrid_decode_with_baseline(&model, &draft.tokens, &config, greedy.steps)
                .map_err(|source| HarnessError::Decode {
                    utterance_id: id,
                    source,
                })?;
            outcome.trace.draft_steps = draft.steps;
            Ok(KResult {
                k,
                transformer_cost: cost.transformer_cost(&outcome.trace),
                step_ratio: step_ratio(&outcome.trace, cost)?,
                wer_vs_greedy: edit_distance(&greedy.output, &outcome.output).wer,
                outcome,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    Ok(UtteranceRecord {
        schema_version: SCHEMA_VERSION,
        utterance_id: id,
        model: entry.model.clone(),
        greedy: greedy.output.into_vec(),
        greedy_terminated: greedy.terminated,
        baseline_steps: greedy.steps,
        draft: draft.tokens.into_vec(),
        draft_steps: draft.steps,
        draft_edits,
        results,
    })
}

/// Processes every entry, in parallel when `threads != 1`. The output is
/// ordered by utterance id regardless of scheduling.
pub fn process_corpus(
    entries: &[CorpusEntry],
    config: &ExperimentConfig,
) -> Result<Vec<UtteranceRecord>, HarnessError> {
    config.validate()?;
    let mut records = with_pool(config.run.threads, || {
        entries
            .par_iter()
            .map(|e| process_entry(e, &config.run.k_values, config.run.l_cap, &config.cost))
            .collect::<Result<Vec<_>, _>>()
    })?;
    records.sort_by_key(|r| r.utterance_id);
    Ok(records)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

/// Per-budget aggregates, in the order of `k_values`.
pub fn summarize(records: &[UtteranceRecord], k_values: &[usize]) -> Vec<KSummary> {
    k_values
        .iter()
        .map(|&k| {
            let rows: Vec<(&UtteranceRecord, &KResult)> = records
                .iter()
                .filter_map(|r| r.result(k).map(|res| (r, res)))
                .collect();
            let ratios: Vec<f64> = rows.iter().map(|(_, res)| res.step_ratio).collect();
            let exits = |path: ExitPath| {
                rows.iter()
                    .filter(|(_, res)| res.outcome.trace.exit_path == path)
                    .count()
            };
            KSummary {
                schema_version: SCHEMA_VERSION,
                k,
                utterances: rows.len(),
                mean_draft_wer: mean(rows.iter().map(|(r, _)| r.draft_edits.wer)),
                mean_hybrid_wer: mean(rows.iter().map(|(_, res)| res.wer_vs_greedy)),
                mean_baseline_steps: mean(rows.iter().map(|(r, _)| r.baseline_steps as f64)),
                mean_transformer_steps: mean(rows.iter().map(|(_, res)| res.transformer_cost)),
                mean_ratio: mean(ratios.iter().copied()),
                median_ratio: median(&ratios),
                eos_confirmed: exits(ExitPath::EosConfirmed),
                appended_eos: exits(ExitPath::AppendedEos),
                appended_truncated: exits(ExitPath::AppendedTruncated),
            }
        })
        .collect()
}

fn utterance_rows(records: &[UtteranceRecord]) -> Vec<UtteranceRow> {
    records
        .iter()
        .flat_map(|r| {
            r.results.iter().map(move |res| UtteranceRow {
                schema_version: SCHEMA_VERSION,
                utterance_id: r.utterance_id,
                k: res.k,
                greedy_len: r.greedy.len(),
                draft_len: r.draft.len(),
                output_len: res.outcome.output.len(),
                exit_path: res.outcome.trace.exit_path,
                iterations: res.outcome.trace.iterations,
                verify_passes: res.outcome.trace.verify_passes,
                ar_steps: res.outcome.trace.ar_steps,
                baseline_steps: r.baseline_steps,
                transformer_cost: res.transformer_cost,
                step_ratio: res.step_ratio,
                draft_wer: r.draft_edits.wer,
                hybrid_wer: res.wer_vs_greedy,
            })
        })
        .collect()
}

pub(crate) fn write_csv_file<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows)?;
    Ok(())
}

/// Writes `records.jsonl`, `utterances.csv`, `summary.csv` and
/// `run_meta.json` into `out_dir`.
pub fn write_results(
    records: &[UtteranceRecord],
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<KSummary>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    write_jsonl(&out_dir.join(RECORDS_FILE), records)?;
    write_csv_file(&out_dir.join(UTTERANCES_FILE), &utterance_rows(records))?;
    let summary = summarize(records, &config.run.k_values);
    write_csv_file(&out_dir.join(SUMMARY_FILE), &summary)?;
    let meta = RunMeta {
        schema_version: SCHEMA_VERSION,
        master_seed: config.master_seed,
        k_values: config.run.k_values.clone(),
        cost: config.cost,
        report: config.report,
    };
    let meta_path = out_dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    fs::write(&meta_path, text).map_err(|e| HarnessError::io(&meta_path, e))?;
    Ok(summary)
}

pub fn run_experiment(
    corpus: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<KSummary>, HarnessError> {
    let entries = read_corpus(corpus)?;
    let records = process_corpus(&entries, config)?;
    write_results(&records, config, out_dir)
}
