use hybrid_decode::{
    build_ngram_model, corrupt_draft, greedy_decode, CorruptedGreedyDraft, CorruptionSpec, DraftGenerator,
    ModelSpec, Step, VerifierModel, Vocab,
};
use proptest::prelude::*;

fn vocab(n: u32) -> Vocab {
    Vocab::new(n).unwrap()
}

#[test]
fn ngram_greedy_golden() {
    // Frozen from the first run of the greedy definition.
    let model = build_ngram_model(vocab(16), 3, 0.08, 3).unwrap();
    let g = greedy_decode(&model, 1024);
    assert_eq!(
        g.output.as_slice(),
        &[2, 7, 10, 3, 4, 7, 15, 6, 11, 9, 12, 12, 13, 9, 3, 4, 2, 4, 13]
    );
    assert!(g.terminated);
    assert_eq!(g.steps, 20);
}

#[test]
fn ngram_looping_model_is_flagged_non_terminating() {
    let model = build_ngram_model(vocab(16), 2, 0.1, 11).unwrap();
    let g = greedy_decode(&model, 1024);
    assert!(!g.terminated);
    assert_eq!(g.output.len(), 1024);
    assert_eq!(&g.output[..12], &[13, 5, 14, 10, 7, 10, 11, 11, 3, 5, 5, 11]);
}

#[test]
fn ngram_mean_greedy_length_regression() {
    // vocab 32, order 2, eos bias 0.02, seeds 7..107, cap 1024.
    let v = vocab(32);
    let (total, terminated) = (7..107u64).fold((0usize, 0usize), |(t, n), seed| {
        let g = greedy_decode(&build_ngram_model(v, 2, 0.02, seed).unwrap(), 1024);
        (t + g.output.len(), n + usize::from(g.terminated))
    });
    assert_eq!(total, 50_341);
    assert_eq!(terminated, 52);
}

#[test]
fn corruption_goldens() {
    let v = vocab(16);
    let spec = CorruptionSpec::new(0.2, 0.0, 0.0, 42).unwrap();
    assert_eq!(corrupt_draft(&[4, 5, 6, 8, 9], &spec, &v).as_slice(), &[4, 5, 6, 8, 9]);
    assert_eq!(
        corrupt_draft(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12], &spec, &v).as_slice(),
        &[1, 2, 3, 4, 5, 6, 10, 8, 12, 10, 11, 12]
    );
    let mixed = CorruptionSpec::new(0.5, 0.3, 0.2, 42).unwrap();
    assert_eq!(corrupt_draft(&[4, 5, 6, 8, 9], &mixed, &v).as_slice(), &[4, 5, 4, 8, 6, 8, 8]);
}

#[test]
fn corrupted_draft_generator_reports_its_length() {
    let d = CorruptedGreedyDraft {
        clean: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12].into(),
        corruption: CorruptionSpec::new(0.0, 0.5, 0.0, 1).unwrap(),
        vocab: vocab(16),
    }
    .draft();
    assert_eq!(d.steps, d.tokens.len());
    assert!(d.tokens.len() > 12);
}

#[test]
fn ngram_spec_json_is_stable() {
    let model = build_ngram_model(vocab(64), 3, 0.005, 99).unwrap();
    let json = serde_json::to_string(&ModelSpec::from(&model)).unwrap();
    assert_eq!(
        json,
        r#"{"kind":"ngram","vocab_size":64,"order":3,"eos_bias":0.005,"seed":99}"#
    );
    let rebuilt: ModelSpec = serde_json::from_str(&json).unwrap();
    let rebuilt = rebuilt.build().unwrap();
    assert_eq!(greedy_decode(&rebuilt, 256), greedy_decode(&model, 256));
}

fn arb_ngram() -> impl Strategy<Value = hybrid_decode::NGramModel> {
    (1usize..=3, 8u32..=64, 0.0f64..0.2, any::<u64>())
        .prop_map(|(order, size, bias, seed)| build_ngram_model(vocab(size), order, bias, seed).unwrap())
}

proptest! {
    #[test]
    fn teacher_forcing_matches_stepwise_prediction(
        model in arb_ngram(),
        raw in prop::collection::vec(any::<u32>(), 0..40),
    ) {
        let size = model.vocab().size();
        let reference: Vec<u32> = raw.into_iter().map(|t| t % size).collect();
        let tf = model.teacher_forced_predict(&reference);
        prop_assert_eq!(tf.predictions.len(), reference.len());
        for i in 0..reference.len() {
            prop_assert_eq!(tf.predictions[i], model.next_token(&reference[..i]));
        }
        prop_assert_eq!(tf.eos_flag, model.next_token(&reference) == Step::Eos);
    }

    #[test]
    fn greedy_output_is_a_teacher_forcing_fixed_point(model in arb_ngram()) {
        let g = greedy_decode(&model, 300);
        if g.terminated {
            let tf = model.teacher_forced_predict(&g.output);
            prop_assert!(tf.eos_flag);
            for (p, &t) in tf.predictions.iter().zip(g.output.iter()) {
                prop_assert_eq!(*p, Step::Token(t));
            }
        }
        prop_assert_eq!(g.steps, g.output.len() + usize::from(g.terminated));
    }

    #[test]
    fn corruption_never_leaves_vocab(
        raw in prop::collection::vec(0u32..8, 0..60),
        sub in 0.0f64..=1.0, ins in 0.0f64..=1.0, del in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let v = vocab(8);
        let spec = CorruptionSpec::new(sub, ins, del, seed).unwrap();
        let out = corrupt_draft(&raw, &spec, &v);
        prop_assert!(out.validate(&v, usize::MAX).is_ok());
        prop_assert!(out.len() <= 2 * raw.len());
        prop_assert_eq!(&out, &corrupt_draft(&raw, &spec, &v));
        let identity = corrupt_draft(&raw, &CorruptionSpec::clean(seed), &v);
        prop_assert_eq!(identity.as_slice(), raw.as_slice());
    }
}
