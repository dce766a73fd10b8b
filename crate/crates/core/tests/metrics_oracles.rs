mod common;

use common::{enumerate_alignments, optimal_splits, recursive_distance};
use hybrid_decode::edit_distance;
use proptest::prelude::*;

#[test]
fn worked_alignment_matches_enumeration() {
    let reference = ['a', 'b', 'c', 'd', 'e'];
    let hypothesis = ['a', 'c', 'd', 'q', 'e', 'f'];
    assert_eq!(enumerate_alignments(&reference, &hypothesis), 3);
    let splits = optimal_splits(&reference, &hypothesis);
    let e = edit_distance(&reference, &hypothesis);
    // Frozen: delete b, insert q, insert f.
    assert_eq!((e.substitutions, e.deletions, e.insertions), (0, 1, 2));
    assert!(splits.contains(&(0, 1, 2)));
    assert_eq!(e.wer, 0.6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn split_is_an_optimal_alignment(
        a in prop::collection::vec(0u8..4, 0..=12),
        b in prop::collection::vec(0u8..4, 0..=12),
    ) {
        let e = edit_distance(&a, &b);
        prop_assert_eq!(e.errors(), recursive_distance(&a, &b));
        prop_assert!(optimal_splits(&a, &b).contains(&(e.substitutions, e.deletions, e.insertions)));
        prop_assert_eq!(a.len() - e.deletions + e.insertions, b.len());
    }

    #[test]
    fn zero_iff_identical_and_symmetric_total(
        a in prop::collection::vec(0u8..4, 0..=16),
        b in prop::collection::vec(0u8..4, 0..=16),
    ) {
        prop_assert_eq!(edit_distance(&a, &a).wer, 0.0);
        let ab = edit_distance(&a, &b);
        prop_assert_eq!(ab.errors() == 0, a == b);
        prop_assert_eq!(ab.errors(), edit_distance(&b, &a).errors());
    }

    #[test]
    fn triangle_inequality(
        a in prop::collection::vec(0u8..3, 0..=10),
        b in prop::collection::vec(0u8..3, 0..=10),
        c in prop::collection::vec(0u8..3, 0..=10),
    ) {
        let d = |x: &[u8], y: &[u8]| edit_distance(x, y).errors();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }
}
