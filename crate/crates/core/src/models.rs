//! Verifier and draft-generator interfaces, plus the deterministic toy models
//! used by tests and the harness.
//!
//! A verifier is an argmax-deterministic next-token function. The hybrid
//! decoder only ever calls it through [`VerifierModel::next_token`] and
//! [`VerifierModel::teacher_forced_predict`]; one model instance stands for
//! one utterance (its conditioning input is baked into the instance).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::types::{Step, TokenId, TokenSeq, Vocab};

/// Result of one teacher-forced pass over a reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeacherForced {
    /// `predictions[i]` is the model's next step given `reference[..i]`.
    /// A mid-sequence [`Step::Eos`] acts as the mismatch marker: it never
    /// equals a content token.
    pub predictions: Vec<Step>,
    /// Whether the model predicts eos after consuming the whole reference.
    pub eos_flag: bool,
}

impl TeacherForced {
    /// Content view of the predictions, with `None` where eos was predicted.
    pub fn tokens(&self) -> Vec<Option<TokenId>> {
        self.predictions.iter().map(|s| s.token()).collect()
    }
}

pub trait VerifierModel {
    fn vocab(&self) -> Vocab;

    /// Greedy next step given the content decoded so far.
    fn next_token(&self, context: &[TokenId]) -> Step;

    /// Scores every prefix of `reference` in one pass.
    ///
    /// Implementations may override this with a batched computation, but
    /// must keep `predictions[i] == next_token(&reference[..i])`.
    fn teacher_forced_predict(&self, reference: &[TokenId]) -> TeacherForced {
        let predictions = (0..reference.len())
            .map(|i| self.next_token(&reference[..i]))
            .collect();
        let eos_flag = self.next_token(reference).is_eos();
        TeacherForced {
            predictions,
            eos_flag,
        }
    }
}

impl<M: VerifierModel + ?Sized> VerifierModel for &M {
    fn vocab(&self) -> Vocab {
        (**self).vocab()
    }

    fn next_token(&self, context: &[TokenId]) -> Step {
        (**self).next_token(context)
    }

    fn teacher_forced_predict(&self, reference: &[TokenId]) -> TeacherForced {
        (**self).teacher_forced_predict(reference)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyOutput {
    pub output: TokenSeq,
    /// True iff eos was produced before `l_cap` tokens.
    pub terminated: bool,
    /// `|output| + 1` when terminated, `|output|` otherwise.
    pub steps: usize,
}

/// Plain token-by-token greedy decoding; the baseline and the oracle.
pub fn greedy_decode<M: VerifierModel + ?Sized>(model: &M, l_cap: usize) -> GreedyOutput {
    let mut output = Vec::new();
    let mut steps = 0;
    while output.len() < l_cap {
        steps += 1;
        match model.next_token(&output) {
            Step::Eos => {
                return GreedyOutput {
                    output: output.into(),
                    terminated: true,
                    steps,
                }
            }
            Step::Token(t) => output.push(t),
        }
    }
    GreedyOutput {
        output: output.into(),
        terminated: false,
        steps,
    }
}

/// SplitMix64 finalizer. Stable across platforms and releases, which keeps
/// hashed tables and derived seeds reproducible.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one hash, seeded.
pub fn hash_words(seed: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    words
        .into_iter()
        .fold(mix64(seed), |acc, w| mix64(acc ^ mix64(w)))
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Random n-gram verifier. Each length-`order` context window (left-padded
/// with a bos sentinel) maps to a next token or eos through a seeded hash, so
/// the table is total over all contexts without being materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramModel {
    vocab: Vocab,
    order: usize,
    eos_bias: f64,
    seed: u64,
}

pub fn build_ngram_model(
    vocab: Vocab,
    order: usize,
    eos_bias: f64,
    seed: u64,
) -> Result<NGramModel, ModelError> {
    if !(1..=3).contains(&order) {
        return Err(ModelError::InvalidOrder(order));
    }
    if !(0.0..=1.0).contains(&eos_bias) {
        return Err(ModelError::InvalidEosBias(eos_bias));
    }
    Ok(NGramModel {
        vocab,
        order,
        eos_bias,
        seed,
    })
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn eos_bias(&self) -> f64 {
        self.eos_bias
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn bos(&self) -> u64 {
        u64::from(self.vocab.size()) + 1
    }

    /// Table lookup for an explicit window (oldest token first).
    fn lookup(&self, window: impl IntoIterator<Item = u64>) -> Step {
        let h = hash_words(self.seed, window);
        if unit_interval(h) < self.eos_bias {
            Step::Eos
        } else {
            Step::Token((mix64(h) % u64::from(self.vocab.size())) as TokenId)
        }
    }
}

impl VerifierModel for NGramModel {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn next_token(&self, context: &[TokenId]) -> Step {
        let pad = self.order.saturating_sub(context.len());
        let tail = &context[context.len().saturating_sub(self.order)..];
        self.lookup(
            std::iter::repeat_n(self.bos(), pad).chain(tail.iter().map(|&t| u64::from(t))),
        )
    }
}

/// Off-trunk override for a [`ScriptedModel`]: contexts of the form
/// `trunk[..prefix_len] ++ suffix` (with `suffix[0] != trunk[prefix_len]`)
/// predict `next`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRule {
    pub prefix_len: usize,
    pub suffix: Vec<TokenId>,
    pub next: Step,
}

/// Verifier whose greedy path is a fixed trunk. Used to build exact
/// correction scenarios.
///
/// On the trunk it emits the following trunk token, and eos at the end.
/// Off the trunk, a matching [`RepairRule`] wins; otherwise it resyncs
/// positionally and predicts `trunk[|context|]` (eos past the end).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedModel {
    vocab: Vocab,
    trunk: TokenSeq,
    repair_rules: BTreeMap<(usize, Vec<TokenId>), Step>,
}

impl ScriptedModel {
    pub fn new(vocab: Vocab, trunk: Vec<TokenId>) -> Result<Self, ModelError> {
        let trunk = TokenSeq::new(trunk, &vocab, usize::MAX)?;
        Ok(Self {
            vocab,
            trunk,
            repair_rules: BTreeMap::new(),
        })
    }

    pub fn with_rule(mut self, rule: RepairRule) -> Result<Self, ModelError> {
        if let Step::Token(t) = rule.next {
            TokenSeq::new(vec![t], &self.vocab, 1)?;
        }
        TokenSeq::new(rule.suffix.clone(), &self.vocab, usize::MAX)?;
        self.repair_rules
            .insert((rule.prefix_len, rule.suffix), rule.next);
        Ok(self)
    }

    pub fn trunk(&self) -> &TokenSeq {
        &self.trunk
    }

    pub fn rules(&self) -> impl Iterator<Item = RepairRule> + '_ {
        self.repair_rules
            .iter()
            .map(|((prefix_len, suffix), &next)| RepairRule {
                prefix_len: *prefix_len,
                suffix: suffix.clone(),
                next,
            })
    }

    fn trunk_step(&self, position: usize) -> Step {
        self.trunk
            .get(position)
            .map_or(Step::Eos, |&t| Step::Token(t))
    }
}

impl VerifierModel for ScriptedModel {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn next_token(&self, context: &[TokenId]) -> Step {
        let shared = context
            .iter()
            .zip(self.trunk.iter())
            .take_while(|(a, b)| a == b)
            .count();
        if shared == context.len() {
            return self.trunk_step(shared);
        }
        let key = (shared, context[shared..].to_vec());
        match self.repair_rules.get(&key) {
            Some(&step) => step,
            None => self.trunk_step(context.len()),
        }
    }
}

/// Emits the same token for every context and never terminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeaterModel {
    vocab: Vocab,
    token: TokenId,
}

impl RepeaterModel {
    pub fn new(vocab: Vocab, token: TokenId) -> Result<Self, ModelError> {
        if !vocab.contains(token) {
            return Err(ModelError::InvalidRepeatToken {
                token,
                size: vocab.size(),
            });
        }
        Ok(Self { vocab, token })
    }
}

impl VerifierModel for RepeaterModel {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn next_token(&self, _context: &[TokenId]) -> Step {
        Step::Token(self.token)
    }
}

/// Serializable description of a verifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Ngram {
        vocab_size: u32,
        order: usize,
        eos_bias: f64,
        seed: u64,
    },
    Scripted {
        vocab_size: u32,
        trunk: Vec<TokenId>,
        #[serde(default)]
        repair_rules: Vec<RepairRule>,
    },
    Repeater {
        vocab_size: u32,
        token: TokenId,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<AnyModel, ModelError> {
        Ok(match self {
            ModelSpec::Ngram {
                vocab_size,
                order,
                eos_bias,
                seed,
            } => AnyModel::Ngram(build_ngram_model(
                Vocab::new(*vocab_size)?,
                *order,
                *eos_bias,
                *seed,
            )?),
            ModelSpec::Scripted {
                vocab_size,
                trunk,
                repair_rules,
            } => {
                let mut model = ScriptedModel::new(Vocab::new(*vocab_size)?, trunk.clone())?;
                for rule in repair_rules {
                    model = model.with_rule(rule.clone())?;
                }
                AnyModel::Scripted(model)
            }
            ModelSpec::Repeater { vocab_size, token } => {
                AnyModel::Repeater(RepeaterModel::new(Vocab::new(*vocab_size)?, *token)?)
            }
        })
    }
}

impl From<&NGramModel> for ModelSpec {
    fn from(m: &NGramModel) -> Self {
        ModelSpec::Ngram {
            vocab_size: m.vocab.size(),
            order: m.order,
            eos_bias: m.eos_bias,
            seed: m.seed,
        }
    }
}

impl From<&ScriptedModel> for ModelSpec {
    fn from(m: &ScriptedModel) -> Self {
        ModelSpec::Scripted {
            vocab_size: m.vocab.size(),
            trunk: m.trunk.to_vec(),
            repair_rules: m.rules().collect(),
        }
    }
}

impl From<&RepeaterModel> for ModelSpec {
    fn from(m: &RepeaterModel) -> Self {
        ModelSpec::Repeater {
            vocab_size: m.vocab.size(),
            token: m.token,
        }
    }
}

/// Any of the built-in verifiers, as built from a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Ngram(NGramModel),
    Scripted(ScriptedModel),
    Repeater(RepeaterModel),
}

impl VerifierModel for AnyModel {
    fn vocab(&self) -> Vocab {
        match self {
            AnyModel::Ngram(m) => m.vocab(),
            AnyModel::Scripted(m) => m.vocab(),
            AnyModel::Repeater(m) => m.vocab(),
        }
    }

    fn next_token(&self, context: &[TokenId]) -> Step {
        match self {
            AnyModel::Ngram(m) => m.next_token(context),
            AnyModel::Scripted(m) => m.next_token(context),
            AnyModel::Repeater(m) => m.next_token(context),
        }
    }
}

/// Per-position error rates for simulated draft errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(sub_rate: f64, ins_rate: f64, del_rate: f64, seed: u64) -> Result<Self, ModelError> {
        let spec = Self {
            sub_rate,
            ins_rate,
            del_rate,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn clean(seed: u64) -> Self {
        Self {
            sub_rate: 0.0,
            ins_rate: 0.0,
            del_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("sub_rate", self.sub_rate),
            ("ins_rate", self.ins_rate),
            ("del_rate", self.del_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidRate { name, value });
            }
        }
        Ok(())
    }
}

/// Injects seeded substitutions, insertions and deletions into a clean
/// sequence, one left-to-right pass.
///
/// Every position draws deletion, substitution and insertion in that order
/// (all three draws always happen, keeping the random stream aligned). An
/// insertion places a uniform token before the position; a deletion drops
/// the position; a substitution replaces it with a uniform different token.
pub fn corrupt_draft(greedy_output: &[TokenId], spec: &CorruptionSpec, vocab: &Vocab) -> TokenSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let size = vocab.size();
    let mut out = Vec::with_capacity(greedy_output.len() + 4);
    for &token in greedy_output {
        let delete = rng.random::<f64>() < spec.del_rate;
        let substitute = rng.random::<f64>() < spec.sub_rate;
        let insert = rng.random::<f64>() < spec.ins_rate;
        if insert {
            out.push(rng.random_range(0..size));
        }
        if delete {
            continue;
        }
        if substitute {
            let drawn = rng.random_range(0..size - 1);
            out.push(if drawn >= token { drawn + 1 } else { drawn });
        } else {
            out.push(token);
        }
    }
    out.into()
}

/// A first-pass hypothesis and what it cost to produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draft {
    pub tokens: TokenSeq,
    pub steps: usize,
}

pub trait DraftGenerator {
    fn draft(&self) -> Draft;
}

/// A fixed hypothesis, charged one step per token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedDraft(pub TokenSeq);

impl DraftGenerator for FixedDraft {
    fn draft(&self) -> Draft {
        Draft {
            steps: self.0.len(),
            tokens: self.0.clone(),
        }
    }
}

/// Stands in for a cheap first-pass decoder: the verifier's own greedy output
/// with simulated recognition errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedGreedyDraft {
    pub clean: TokenSeq,
    pub corruption: CorruptionSpec,
    pub vocab: Vocab,
}

impl DraftGenerator for CorruptedGreedyDraft {
    fn draft(&self) -> Draft {
        let tokens = corrupt_draft(&self.clean, &self.corruption, &self.vocab);
        Draft {
            steps: tokens.len(),
            tokens,
        }
    }
}
