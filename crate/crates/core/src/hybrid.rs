//! Hybrid decoding: a cheap draft is verified by the expensive decoder in
//! teacher-forcing mode and patched only where it diverges.
//!
//! One loop iteration costs one teacher-forced pass:
//!
//! 1. Verify the reference and find the first divergence `i*`.
//! 2. If the whole reference matches and the verifier predicts eos, return.
//! 3. If the whole reference matches without eos, greedily append at most
//!    `K` tokens and return without re-verifying. This bounds the damage a
//!    repeating verifier can do.
//! 4. Otherwise greedily decode a patch of at most `K` tokens from the
//!    confirmed prefix `reference[..i*]`, locate the last patch token within
//!    the next `2|patch|` reference tokens, splice, and loop.
//!
//! When the loop exits through step 2 the output is exactly the verifier's
//! greedy decode. Every exit path returns a prefix of the greedy
//! continuation.

use serde::{Deserialize, Serialize};

use crate::error::HybridError;
use crate::models::{greedy_decode, DraftGenerator, VerifierModel};
use crate::types::{ExitPath, HybridTrace, Step, TokenId, TokenSeq, DEFAULT_L_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Patch and append budget `K`.
    pub budget: usize,
    pub l_cap: usize,
    pub iteration_cap: usize,
}

impl HybridConfig {
    pub fn new(budget: usize) -> Self {
        Self::with_l_cap(budget, DEFAULT_L_CAP)
    }

    /// Iteration cap defaults to `l_cap + 2`.
    pub fn with_l_cap(budget: usize, l_cap: usize) -> Self {
        Self {
            budget,
            l_cap,
            iteration_cap: l_cap + 2,
        }
    }

    pub fn validate(&self) -> Result<(), HybridError> {
        if self.budget == 0 {
            return Err(HybridError::ZeroBudget);
        }
        if self.iteration_cap == 0 {
            return Err(HybridError::ZeroIterationCap);
        }
        Ok(())
    }
}

/// A greedy correction generated from a confirmed prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchResult {
    /// At most `K` content tokens; eos is never stored.
    pub patch: TokenSeq,
    /// The verifier produced eos while generating the patch.
    pub patch_eos: bool,
    pub ar_steps_used: usize,
}

/// Inclusive end of the reference segment a patch replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchEnd {
    At(usize),
    /// Replace everything from the divergence to the end of the reference.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Continuation {
    pub output: TokenSeq,
    pub got_eos: bool,
    pub ar_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridOutcome {
    pub output: TokenSeq,
    #[serde(flatten)]
    pub trace: HybridTrace,
}

/// Smallest `i` with `reference[i] != predictions[i]`, or `reference.len()`.
pub fn first_divergence(reference: &[TokenId], predictions: &[Step]) -> Result<usize, HybridError> {
    if reference.len() != predictions.len() {
        return Err(HybridError::LengthMismatch {
            reference: reference.len(),
            predicted: predictions.len(),
        });
    }
    Ok(reference
        .iter()
        .zip(predictions)
        .position(|(&r, p)| !p.matches(r))
        .unwrap_or(reference.len()))
}

/// Greedily extends `confirmed_prefix` by up to `budget` tokens, stopping at
/// eos.
pub fn generate_patch<M: VerifierModel + ?Sized>(
    model: &M,
    confirmed_prefix: &[TokenId],
    budget: usize,
) -> PatchResult {
    let mut context = confirmed_prefix.to_vec();
    let start = context.len();
    let mut ar_steps_used = 0;
    let mut patch_eos = false;
    while context.len() - start < budget {
        ar_steps_used += 1;
        match model.next_token(&context) {
            Step::Eos => {
                patch_eos = true;
                break;
            }
            Step::Token(t) => context.push(t),
        }
    }
    PatchResult {
        patch: context.split_off(start).into(),
        patch_eos,
        ar_steps_used,
    }
}

/// Decides which reference segment starting at `divergence` the patch
/// replaces.
///
/// An eos-terminated patch replaces the whole tail. Otherwise the first
/// occurrence of the patch's last token in
/// `[divergence, divergence + 2|patch|)` (clipped to the reference) ends the
/// segment; if it is absent, a segment of the patch's own length is replaced.
pub fn find_patch_range(
    reference: &[TokenId],
    divergence: usize,
    patch: &PatchResult,
) -> Result<PatchEnd, HybridError> {
    if divergence >= reference.len() {
        return Err(HybridError::DivergenceOutOfBounds {
            index: divergence,
            len: reference.len(),
        });
    }
    if patch.patch_eos {
        return Ok(PatchEnd::Tail);
    }
    let Some(&last) = patch.patch.last() else {
        return Err(HybridError::EmptyPatch);
    };
    let window_end = reference.len().min(divergence + 2 * patch.patch.len());
    let found = reference[divergence..window_end]
        .iter()
        .position(|&t| t == last)
        .map(|offset| divergence + offset);
    Ok(PatchEnd::At(found.unwrap_or_else(|| {
        reference.len().min(divergence + patch.patch.len()) - 1
    })))
}

/// `reference[..divergence] ++ patch ++ reference[end + 1..]`; a tail end
/// drops the suffix.
pub fn apply_patch(
    reference: &[TokenId],
    divergence: usize,
    end: PatchEnd,
    patch: &[TokenId],
    l_cap: usize,
) -> Result<TokenSeq, HybridError> {
    let resume = match end {
        PatchEnd::At(j) => {
            if divergence > j + 1 || j >= reference.len() {
                return Err(HybridError::InvalidRange {
                    start: divergence,
                    end: j,
                    len: reference.len(),
                });
            }
            j + 1
        }
        PatchEnd::Tail => {
            if divergence > reference.len() {
                return Err(HybridError::DivergenceOutOfBounds {
                    index: divergence,
                    len: reference.len(),
                });
            }
            reference.len()
        }
    };
    let len = divergence + patch.len() + (reference.len() - resume);
    if len > l_cap {
        return Err(HybridError::Overflow { len, l_cap });
    }
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&reference[..divergence]);
    out.extend_from_slice(patch);
    out.extend_from_slice(&reference[resume..]);
    Ok(out.into())
}

/// Appends up to `budget` greedy tokens to a fully verified reference that
/// the verifier did not close with eos.
pub fn append_continuation<M: VerifierModel + ?Sized>(
    model: &M,
    reference: &[TokenId],
    budget: usize,
    l_cap: usize,
) -> Result<Continuation, HybridError> {
    let mut output = reference.to_vec();
    let mut ar_steps = 0;
    let mut got_eos = false;
    for _ in 0..budget {
        ar_steps += 1;
        match model.next_token(&output) {
            Step::Eos => {
                got_eos = true;
                break;
            }
            Step::Token(t) => {
                if output.len() + 1 > l_cap {
                    return Err(HybridError::Overflow {
                        len: output.len() + 1,
                        l_cap,
                    });
                }
                output.push(t);
            }
        }
    }
    Ok(Continuation {
        output: output.into(),
        got_eos,
        ar_steps,
    })
}

/// Runs hybrid decoding. The trace's `baseline_steps` comes from a separate
/// greedy decode of `model` that is not charged to the trace.
pub fn hybrid_decode<M: VerifierModel + ?Sized>(
    model: &M,
    draft: &[TokenId],
    config: &HybridConfig,
) -> Result<HybridOutcome, HybridError> {
    let baseline_steps = greedy_decode(model, config.l_cap).steps;
    hybrid_decode_with_baseline(model, draft, config, baseline_steps)
}

/// Like [`hybrid_decode`], with the draft and its step cost taken from a
/// generator.
pub fn hybrid_decode_from<M, G>(
    model: &M,
    generator: &G,
    config: &HybridConfig,
) -> Result<HybridOutcome, HybridError>
where
    M: VerifierModel + ?Sized,
    G: DraftGenerator + ?Sized,
{
    let draft = generator.draft();
    let mut outcome = hybrid_decode(model, &draft.tokens, config)?;
    outcome.trace.draft_steps = draft.steps;
    Ok(outcome)
}

/// Like [`hybrid_decode`] for callers that already know the greedy step
/// count.
pub fn hybrid_decode_with_baseline<M: VerifierModel + ?Sized>(
    model: &M,
    draft: &[TokenId],
    config: &HybridConfig,
    baseline_steps: usize,
) -> Result<HybridOutcome, HybridError> {
    config.validate()?;
    TokenSeq::from(draft).validate(&model.vocab(), config.l_cap)?;

    let budget = config.budget;
    let mut reference = draft.to_vec();
    let mut trace = HybridTrace {
        verify_passes: 0,
        ar_steps: 0,
        draft_steps: draft.len(),
        iterations: 0,
        divergence_indices: Vec::new(),
        exit_path: ExitPath::EosConfirmed,
        baseline_steps,
    };

    loop {
        if trace.iterations >= config.iteration_cap {
            return Err(HybridError::NonTermination(config.iteration_cap));
        }
        trace.iterations += 1;
        trace.verify_passes += 1;

        let verified = model.teacher_forced_predict(&reference);
        let divergence = first_divergence(&reference, &verified.predictions)?;
        trace.divergence_indices.push(divergence);

        if divergence == reference.len() {
            if verified.eos_flag {
                trace.exit_path = ExitPath::EosConfirmed;
                return Ok(HybridOutcome {
                    output: reference.into(),
                    trace,
                });
            }
            let appended = append_continuation(model, &reference, budget, config.l_cap)?;
            trace.ar_steps += appended.ar_steps;
            trace.exit_path = if appended.got_eos {
                ExitPath::AppendedEos
            } else {
                ExitPath::AppendedTruncated
            };
            return Ok(HybridOutcome {
                output: appended.output,
                trace,
            });
        }

        let patch = generate_patch(model, &reference[..divergence], budget);
        trace.ar_steps += patch.ar_steps_used;
        let end = find_patch_range(&reference, divergence, &patch)?;
        reference = apply_patch(&reference, divergence, end, &patch.patch, config.l_cap)?.into_vec();
    }
}
