//! Edit distance / WER, step ratios, and the histograms used in reports.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::types::{HybridTrace, StepCostModel};

/// Length bucket used for cost-by-length and short-utterance analyses.
pub const LENGTH_BIN: usize = 10;

/// Counts from one minimal unit-cost alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditStats {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    /// `(S + D + I) / ref_len`. With an empty reference this is
    /// `insertions / 1` and `empty_reference` is set.
    pub wer: f64,
    pub empty_reference: bool,
}

impl EditStats {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Move {
    Diagonal,
    Insert,
    Delete,
}

/// Levenshtein alignment of `hypothesis` against `reference`.
///
/// The backtrace prefers the diagonal (match or substitution), then
/// insertion, then deletion, so the S/D/I split is reproducible even though
/// only the total is unique.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditStats {
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut dist = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        dist[i * width] = i;
    }
    for j in 0..=m {
        dist[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dist[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let ins = dist[i * width + j - 1] + 1;
            let del = dist[(i - 1) * width + j] + 1;
            dist[i * width + j] = diag.min(ins).min(del);
        }
    }

    let (mut s, mut d, mut ins) = (0, 0, 0);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        let step = if i > 0
            && j > 0
            && dist[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]) == here
        {
            Move::Diagonal
        } else if j > 0 && dist[i * width + j - 1] + 1 == here {
            Move::Insert
        } else {
            Move::Delete
        };
        match step {
            Move::Diagonal => {
                if reference[i - 1] != hypothesis[j - 1] {
                    s += 1;
                }
                i -= 1;
                j -= 1;
            }
            Move::Insert => {
                ins += 1;
                j -= 1;
            }
            Move::Delete => {
                d += 1;
                i -= 1;
            }
        }
    }

    let errors = s + d + ins;
    let empty_reference = n == 0;
    EditStats {
        substitutions: s,
        deletions: d,
        insertions: ins,
        ref_len: n,
        wer: if empty_reference {
            ins as f64
        } else {
            errors as f64 / n as f64
        },
        empty_reference,
    }
}

/// Lowercases and strips punctuation (apostrophes kept), then splits on
/// whitespace.
pub fn normalize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Word-level WER over normalized text.
pub fn text_wer(reference: &str, hypothesis: &str) -> EditStats {
    edit_distance(&normalize_words(reference), &normalize_words(hypothesis))
}

/// Hybrid verifier cost over plain greedy cost for the same utterance.
pub fn step_ratio(trace: &HybridTrace, cost: &StepCostModel) -> Result<f64, MetricsError> {
    let denominator = cost.baseline_cost(trace.baseline_steps);
    if trace.baseline_steps == 0 || denominator == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(cost.transformer_cost(trace) / denominator)
}

/// Histogram over step ratios with half-open percent bins
/// `[k * w, (k + 1) * w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioHistogram {
    pub bin_width: f64,
    /// Bin index `k` to count.
    pub bins: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo_pct: f64,
    pub bin_hi_pct: f64,
    pub count: usize,
}

// Ratios are quotients of small integers; the slack keeps values such as
// 0.35 (stored as 0.34999..) in the bin they name.
const BIN_EPS: f64 = 1e-9;

fn ratio_bin(ratio: f64, bin_width: f64) -> u64 {
    (ratio * 100.0 / bin_width + BIN_EPS).floor() as u64
}

pub fn bin_ratios(ratios: &[f64], bin_width: f64) -> Result<RatioHistogram, MetricsError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(MetricsError::InvalidBinWidth(bin_width));
    }
    let mut bins = BTreeMap::new();
    for &r in ratios {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(MetricsError::InvalidRatio(r));
        }
        *bins.entry(ratio_bin(r, bin_width)).or_insert(0) += 1;
    }
    Ok(RatioHistogram { bin_width, bins })
}

impl RatioHistogram {
    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }

    /// Count in the bin covering `[lo_pct, lo_pct + bin_width)`.
    pub fn count_at(&self, lo_pct: f64) -> usize {
        self.bins
            .get(&ratio_bin(lo_pct / 100.0, self.bin_width))
            .copied()
            .unwrap_or(0)
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        self.bins
            .iter()
            .map(|(&k, &count)| HistogramRow {
                bin_lo_pct: k as f64 * self.bin_width,
                bin_hi_pct: (k + 1) as f64 * self.bin_width,
                count,
            })
            .collect()
    }

    /// CSV with header `bin_lo_pct,bin_hi_pct,count`, ascending bins.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_rows(writer, &self.rows())
    }
}

/// Costs of one utterance under each decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub output_len: usize,
    pub baseline_cost: f64,
    pub draft_cost: f64,
    pub hybrid_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinMeans {
    pub count: usize,
    pub baseline_mean: f64,
    pub draft_mean: f64,
    pub hybrid_mean: f64,
}

/// Mean per-decoder cost in 10-token output-length bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBinnedCost {
    pub bin_size: usize,
    pub bins: BTreeMap<usize, BinMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBinRow {
    pub len_lo: usize,
    pub len_hi: usize,
    pub count: usize,
    pub baseline_mean: f64,
    pub draft_mean: f64,
    pub hybrid_mean: f64,
}

pub fn bin_costs_by_length(rows: &[CostRow]) -> LengthBinnedCost {
    let mut sums: BTreeMap<usize, (usize, f64, f64, f64)> = BTreeMap::new();
    for row in rows {
        let e = sums.entry(row.output_len / LENGTH_BIN).or_default();
        e.0 += 1;
        e.1 += row.baseline_cost;
        e.2 += row.draft_cost;
        e.3 += row.hybrid_cost;
    }
    let bins = sums
        .into_iter()
        .map(|(k, (n, b, d, h))| {
            let n_f = n as f64;
            (
                k,
                BinMeans {
                    count: n,
                    baseline_mean: b / n_f,
                    draft_mean: d / n_f,
                    hybrid_mean: h / n_f,
                },
            )
        })
        .collect();
    LengthBinnedCost {
        bin_size: LENGTH_BIN,
        bins,
    }
}

impl LengthBinnedCost {
    pub fn rows(&self) -> Vec<LengthBinRow> {
        self.bins
            .iter()
            .map(|(&k, m)| LengthBinRow {
                len_lo: k * self.bin_size,
                len_hi: (k + 1) * self.bin_size,
                count: m.count,
                baseline_mean: m.baseline_mean,
                draft_mean: m.draft_mean,
                hybrid_mean: m.hybrid_mean,
            })
            .collect()
    }

    /// CSV with header
    /// `len_lo,len_hi,count,baseline_mean,draft_mean,hybrid_mean`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        write_rows(writer, &self.rows())
    }
}

/// Counts of lengths per `bin_size`-token bucket.
pub fn bin_lengths(lengths: impl IntoIterator<Item = usize>, bin_size: usize) -> BTreeMap<usize, usize> {
    let mut bins = BTreeMap::new();
    for len in lengths {
        *bins.entry(len / bin_size.max(1)).or_insert(0) += 1;
    }
    bins
}

pub(crate) fn write_rows<W: io::Write, R: Serialize>(writer: W, rows: &[R]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ExitPath;

    fn trace(verify: usize, ar: usize, baseline: usize) -> HybridTrace {
        HybridTrace {
            verify_passes: verify,
            ar_steps: ar,
            draft_steps: 0,
            iterations: verify,
            divergence_indices: vec![0; verify],
            exit_path: ExitPath::EosConfirmed,
            baseline_steps: baseline,
        }
    }

    #[test]
    fn identical_sequences_have_zero_wer() {
        let e = edit_distance(&['a', 'b', 'c'], &['a', 'b', 'c']);
        assert_eq!(e.errors(), 0);
        assert_eq!(e.wer, 0.0);
    }

    #[test]
    fn single_substitution() {
        let e = edit_distance(&['a', 'b', 'c'], &['a', 'x', 'c']);
        assert_eq!((e.substitutions, e.deletions, e.insertions), (1, 0, 0));
        assert!((e.wer - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_reference_convention() {
        let e = edit_distance::<u32>(&[], &[1, 2]);
        assert!(e.empty_reference);
        assert_eq!(e.insertions, 2);
        assert_eq!(e.wer, 2.0);
        let e = edit_distance::<u32>(&[], &[]);
        assert_eq!(e.wer, 0.0);
        let e = edit_distance(&[1, 2], &[]);
        assert_eq!((e.deletions, e.wer), (2, 1.0));
    }

    #[test]
    fn tie_break_prefers_substitution() {
        // [a,b] vs [b,a]: total 2 either as two substitutions or ins+del.
        let e = edit_distance(&['a', 'b'], &['b', 'a']);
        assert_eq!((e.substitutions, e.deletions, e.insertions), (2, 0, 0));
    }

    #[test]
    fn text_layer_ignores_case_and_punctuation() {
        let e = text_wer("I dunno, muttered Dick.", "i dunno muttered dick");
        assert_eq!(e.errors(), 0);
        assert_eq!(normalize_words("can't  BE!"), vec!["can't", "be"]);
    }

    #[test]
    fn step_ratio_examples() {
        let unit = StepCostModel::default();
        assert_eq!(step_ratio(&trace(1, 0, 101), &unit), Ok(1.0 / 101.0));
        assert_eq!(step_ratio(&trace(2, 6, 20), &unit), Ok(0.4));
        assert_eq!(
            step_ratio(&trace(1, 0, 0), &unit),
            Err(MetricsError::ZeroBaseline)
        );
    }

    #[test]
    fn ratio_binning_examples() {
        let h = bin_ratios(&[0.10, 0.12, 0.49], 5.0).unwrap();
        assert_eq!(h.bins, BTreeMap::from([(2, 2), (9, 1)]));
        assert_eq!(h.count_at(10.0), 2);
        assert_eq!(h.count_at(45.0), 1);
        assert_eq!(h.total(), 3);
        let h = bin_ratios(&[], 5.0).unwrap();
        assert!(h.bins.is_empty());
        assert!(bin_ratios(&[0.1], 0.0).is_err());
        assert!(bin_ratios(&[-0.1], 5.0).is_err());
    }

    #[test]
    fn ratio_bins_are_half_open() {
        let h = bin_ratios(&[0.35, 0.3, 0.29999], 5.0).unwrap();
        assert_eq!(h.count_at(35.0), 1);
        assert_eq!(h.count_at(30.0), 1);
        assert_eq!(h.count_at(25.0), 1);
    }

    #[test]
    fn histogram_csv_layout() {
        let h = bin_ratios(&[0.10, 0.12, 0.49], 5.0).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bin_lo_pct,bin_hi_pct,count\n10.0,15.0,2\n45.0,50.0,1\n"
        );
    }

    #[test]
    fn length_binning_means() {
        let row = |len, b| CostRow {
            output_len: len,
            baseline_cost: b,
            draft_cost: len as f64,
            hybrid_cost: 1.0,
        };
        let binned = bin_costs_by_length(&[row(7, 8.0)]);
        assert_eq!(binned.bins[&0].baseline_mean, 8.0);

        let binned = bin_costs_by_length(&[row(3, 4.0), row(9, 10.0), row(12, 13.0)]);
        assert_eq!(binned.bins[&0].count, 2);
        assert_eq!(binned.bins[&0].baseline_mean, 7.0);
        assert_eq!(binned.bins[&0].draft_mean, 6.0);
        assert_eq!(binned.bins[&1].baseline_mean, 13.0);
        let rows = binned.rows();
        assert_eq!((rows[1].len_lo, rows[1].len_hi), (10, 20));
    }

    #[test]
    fn length_histogram() {
        let bins = bin_lengths([1, 9, 10, 35], LENGTH_BIN);
        assert_eq!(bins, BTreeMap::from([(0, 2), (1, 1), (3, 1)]));
    }
}
