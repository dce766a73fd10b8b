//! Turns a results directory into tables: a per-K summary, step-ratio
//! histograms, cost by output length, and the length profile of utterances
//! where hybrid decoding saved little.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::corpus::read_jsonl;
use super::run::{summarize, write_csv_file, KSummary, RunMeta, UtteranceRecord, META_FILE, RECORDS_FILE};
use super::SCHEMA_VERSION;
use crate::error::HarnessError;
use crate::metrics::{bin_costs_by_length, bin_lengths, bin_ratios, CostRow, LENGTH_BIN};

pub const SUMMARY_TABLE_FILE: &str = "summary_table.csv";
pub const RATIO_HISTOGRAM_FILE: &str = "ratio_histogram.csv";
pub const LENGTH_COST_FILE: &str = "length_binned_cost.csv";
pub const HIGH_RATIO_FILE: &str = "high_ratio_lengths.csv";
pub const MARKDOWN_FILE: &str = "report.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBinRow {
    pub schema_version: u32,
    pub k: usize,
    pub bin_lo_pct: f64,
    pub bin_hi_pct: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthCostRow {
    pub schema_version: u32,
    pub k: usize,
    pub len_lo: usize,
    pub len_hi: usize,
    pub count: usize,
    pub baseline_mean: f64,
    pub draft_mean: f64,
    pub hybrid_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighRatioRow {
    pub schema_version: u32,
    pub k: usize,
    pub len_lo: usize,
    pub len_hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Vec<KSummary>,
    pub ratio_histogram: Vec<RatioBinRow>,
    pub length_cost: Vec<LengthCostRow>,
    pub high_ratio_lengths: Vec<HighRatioRow>,
    pub markdown: String,
}

impl Report {
    /// Share of high-ratio utterances at budget `k` shorter than `len`.
    pub fn high_ratio_share_below(&self, k: usize, len: usize) -> Option<f64> {
        let rows: Vec<_> = self.high_ratio_lengths.iter().filter(|r| r.k == k).collect();
        let total: usize = rows.iter().map(|r| r.count).sum();
        if total == 0 {
            return None;
        }
        let short: usize = rows
            .iter()
            .filter(|r| r.len_hi <= len)
            .map(|r| r.count)
            .sum();
        Some(short as f64 / total as f64)
    }
}

/// Budgets present in the records, in `meta.k_values` order first.
fn budgets(records: &[UtteranceRecord], meta: &RunMeta) -> Vec<usize> {
    let mut ks = meta.k_values.clone();
    for r in records {
        for res in &r.results {
            if !ks.contains(&res.k) {
                ks.push(res.k);
            }
        }
    }
    ks
}

pub fn build_report(records: &[UtteranceRecord], meta: &RunMeta) -> Result<Report, HarnessError> {
    let ks = budgets(records, meta);
    let summary = summarize(records, &ks);
    let cost = &meta.cost;

    let mut ratio_histogram = Vec::new();
    let mut length_cost = Vec::new();
    let mut high_ratio_lengths = Vec::new();
    for &k in &ks {
        let rows: Vec<_> = records
            .iter()
            .filter_map(|r| r.result(k).map(|res| (r, res)))
            .collect();

        let ratios: Vec<f64> = rows.iter().map(|(_, res)| res.step_ratio).collect();
        let hist = bin_ratios(&ratios, meta.report.bin_width_pct)?;
        ratio_histogram.extend(hist.rows().into_iter().map(|h| RatioBinRow {
            schema_version: SCHEMA_VERSION,
            k,
            bin_lo_pct: h.bin_lo_pct,
            bin_hi_pct: h.bin_hi_pct,
            count: h.count,
        }));

        let costs: Vec<CostRow> = rows
            .iter()
            .map(|(r, res)| CostRow {
                output_len: r.greedy.len(),
                baseline_cost: cost.baseline_cost(r.baseline_steps),
                draft_cost: r.draft_steps as f64 * cost.draft_step_cost,
                hybrid_cost: cost.total_cost(&res.outcome.trace),
            })
            .collect();
        length_cost.extend(bin_costs_by_length(&costs).rows().into_iter().map(|b| LengthCostRow {
            schema_version: SCHEMA_VERSION,
            k,
            len_lo: b.len_lo,
            len_hi: b.len_hi,
            count: b.count,
            baseline_mean: b.baseline_mean,
            draft_mean: b.draft_mean,
            hybrid_mean: b.hybrid_mean,
        }));

        let high = rows
            .iter()
            .filter(|(_, res)| res.step_ratio >= meta.report.high_ratio_threshold)
            .map(|(r, _)| r.greedy.len());
        high_ratio_lengths.extend(bin_lengths(high, LENGTH_BIN).into_iter().map(|(b, count)| HighRatioRow {
            schema_version: SCHEMA_VERSION,
            k,
            len_lo: b * LENGTH_BIN,
            len_hi: (b + 1) * LENGTH_BIN,
            count,
        }));
    }

    let mut report = Report {
        summary,
        ratio_histogram,
        length_cost,
        high_ratio_lengths,
        markdown: String::new(),
    };
    report.markdown = render_markdown(&report, records.len(), meta);
    Ok(report)
}

fn render_markdown(report: &Report, n: usize, meta: &RunMeta) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Hybrid decoding report\n");
    let _ = writeln!(
        md,
        "{n} utterances. Costs in verifier forward steps (verify pass = {}, autoregressive step = {}, draft step = {}).\n",
        meta.cost.verify_pass_cost, meta.cost.ar_step_cost, meta.cost.draft_step_cost
    );
    let _ = writeln!(md, "## WER and steps per K\n");
    let _ = writeln!(
        md,
        "| K | draft WER | hybrid WER | baseline steps | hybrid steps | mean ratio | median ratio | eos_confirmed | appended_eos | appended_truncated |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|---|---|---|");
    for s in &report.summary {
        let _ = writeln!(
            md,
            "| {} | {:.4} | {:.4} | {:.2} | {:.2} | {:.4} | {:.4} | {} | {} | {} |",
            s.k,
            s.mean_draft_wer,
            s.mean_hybrid_wer,
            s.mean_baseline_steps,
            s.mean_transformer_steps,
            s.mean_ratio,
            s.median_ratio,
            s.eos_confirmed,
            s.appended_eos,
            s.appended_truncated
        );
    }
    let _ = writeln!(
        md,
        "\n## High-ratio utterances (ratio >= {})\n",
        meta.report.high_ratio_threshold
    );
    for s in &report.summary {
        let count: usize = report
            .high_ratio_lengths
            .iter()
            .filter(|r| r.k == s.k)
            .map(|r| r.count)
            .sum();
        match report.high_ratio_share_below(s.k, LENGTH_BIN) {
            Some(share) => {
                let _ = writeln!(
                    md,
                    "- K={}: {count} utterances, {:.1}% shorter than {LENGTH_BIN} tokens",
                    s.k,
                    share * 100.0
                );
            }
            None => {
                let _ = writeln!(md, "- K={}: none", s.k);
            }
        }
    }
    md
}

pub fn write_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let paths: Vec<PathBuf> = [
        SUMMARY_TABLE_FILE,
        RATIO_HISTOGRAM_FILE,
        LENGTH_COST_FILE,
        HIGH_RATIO_FILE,
        MARKDOWN_FILE,
    ]
    .iter()
    .map(|f| out_dir.join(f))
    .collect();
    write_csv_file(&paths[0], &report.summary)?;
    write_csv_file(&paths[1], &report.ratio_histogram)?;
    write_csv_file(&paths[2], &report.length_cost)?;
    write_csv_file(&paths[3], &report.high_ratio_lengths)?;
    fs::write(&paths[4], &report.markdown).map_err(|e| HarnessError::io(&paths[4], e))?;
    Ok(paths)
}

/// Reads `records.jsonl` (and `run_meta.json` when present) from
/// `results_dir` and writes the report bundle into `out_dir`.
pub fn report(results_dir: &Path, out_dir: &Path) -> Result<Report, HarnessError> {
    let records: Vec<UtteranceRecord> = read_jsonl(&results_dir.join(RECORDS_FILE))?;
    let meta_path = results_dir.join(META_FILE);
    let meta = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| HarnessError::io(&meta_path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
            path: meta_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        RunMeta::default()
    };
    let report = build_report(&records, &meta)?;
    write_report(&report, out_dir)?;
    Ok(report)
}
