//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use hybrid_decode::{Step, TokenId};

/// Element-wise scan for the first index where a prediction is not the
/// reference token (eos counts as a mismatch).
pub fn naive_first_divergence(reference: &[TokenId], predictions: &[Step]) -> usize {
    let mut i = 0;
    loop {
        if i >= reference.len() || i >= predictions.len() {
            return i;
        }
        let same = match predictions[i] {
            Step::Token(t) => t == reference[i],
            Step::Eos => false,
        };
        if !same {
            return i;
        }
        i += 1;
    }
}

/// Minimal edit distance by memoized top-down recursion.
pub fn recursive_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let d = (go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]))
            .min(go(a, b, i + 1, j, memo) + 1)
            .min(go(a, b, i, j + 1, memo) + 1);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Every (S, D, I) split achieved by some minimal alignment.
pub fn optimal_splits<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> BTreeSet<(usize, usize, usize)> {
    type Memo = HashMap<(usize, usize), (usize, BTreeSet<(usize, usize, usize)>)>;
    fn go<T: PartialEq>(r: &[T], h: &[T], i: usize, j: usize, memo: &mut Memo) -> (usize, BTreeSet<(usize, usize, usize)>) {
        if i == r.len() && j == h.len() {
            return (0, BTreeSet::from([(0, 0, 0)]));
        }
        if let Some(v) = memo.get(&(i, j)) {
            return v.clone();
        }
        let mut options: Vec<(usize, BTreeSet<(usize, usize, usize)>)> = Vec::new();
        if i < r.len() && j < h.len() {
            let sub = usize::from(r[i] != h[j]);
            let (d, set) = go(r, h, i + 1, j + 1, memo);
            options.push((d + sub, set.into_iter().map(|(s, dd, ii)| (s + sub, dd, ii)).collect()));
        }
        if i < r.len() {
            let (d, set) = go(r, h, i + 1, j, memo);
            options.push((d + 1, set.into_iter().map(|(s, dd, ii)| (s, dd + 1, ii)).collect()));
        }
        if j < h.len() {
            let (d, set) = go(r, h, i, j + 1, memo);
            options.push((d + 1, set.into_iter().map(|(s, dd, ii)| (s, dd, ii + 1)).collect()));
        }
        let best = options.iter().map(|o| o.0).min().unwrap();
        let set = options
            .into_iter()
            .filter(|o| o.0 == best)
            .flat_map(|o| o.1)
            .collect();
        memo.insert((i, j), (best, set));
        memo[&(i, j)].clone()
    }
    go(reference, hypothesis, 0, 0, &mut HashMap::new()).1
}

/// Enumerates every alignment path explicitly (small inputs only) and
/// returns the minimum cost.
pub fn enumerate_alignments<T: PartialEq>(r: &[T], h: &[T]) -> usize {
    match (r.split_first(), h.split_first()) {
        (None, _) => h.len(),
        (_, None) => r.len(),
        (Some((a, rr)), Some((b, hh))) => (enumerate_alignments(rr, hh) + usize::from(a != b))
            .min(enumerate_alignments(rr, h) + 1)
            .min(enumerate_alignments(r, hh) + 1),
    }
}

/// Writes a line straight to stderr so it shows even when test output is
/// captured.
pub fn announce(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}
