//! The DCP search: positions are visited in saliency order and at each one
//! the candidate maximizing `J = L_model − λ·L_sim` is adopted, provided it
//! strictly improves the running objective and keeps the spliced text's
//! cosine similarity to the original at or above the configured gate.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::candidates::Candidate;
use crate::corpus::{AttackTarget, Example};
use crate::error::{Error, Result};
use crate::metrics;
use crate::saliency;
use crate::textproc::{detokenize, TokenizedText};
use crate::victim::{self, EmbeddingVector, QueryMeter};

use super::{
    adversarial_objective, finish_result, search_budget_left, search_budget_remaining,
    skipped_result, AttackConfig, AttackContext, AttackMethod, AttackResult, InputTemplate,
    SubstitutionRecord,
};

/// Search state carried across positions. Substitutions are keyed by token
/// index into the original tokenization; `current_text` is always their
/// splice into the original spans.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub substitutions: BTreeMap<usize, Candidate>,
    pub current_text: String,
    /// Objective of `current_text`; strictly increases along a trace.
    pub objective: f64,
    /// Cosine between the original text and `current_text`.
    pub similarity: f64,
    /// (forward, gradient) meter readings at the last state change.
    pub meter_snapshot: (u64, u64),
}

impl PerturbationState {
    fn initial(text: &str, objective: f64, similarity: f64, meter: &QueryMeter) -> Self {
        PerturbationState {
            substitutions: BTreeMap::new(),
            current_text: text.to_string(),
            objective,
            similarity,
            meter_snapshot: (meter.forward_queries(), meter.gradient_queries()),
        }
    }

    /// Splices the accumulated substitutions plus one extra replacement.
    fn splice_with(&self, tt: &TokenizedText, position: usize, replacement: &str) -> Result<String> {
        let mut subs: BTreeMap<usize, String> = self
            .substitutions
            .iter()
            .map(|(&p, c)| (p, c.replacement.clone()))
            .collect();
        subs.insert(position, replacement.to_string());
        detokenize(tt, &subs)
    }
}

/// Evaluates one position's candidates and adopts the best admissible one.
///
/// Candidates whose splice falls below the similarity gate are rejected
/// before any query is spent; the rest each cost one forward. The argmax
/// over gate-passing candidates is adopted iff its objective strictly
/// exceeds the current state's, so the recorded objective sequence is
/// strictly increasing. Empty candidate lists and already-substituted
/// positions are a no-change, not an error.
#[allow(clippy::too_many_arguments)]
pub fn refine_position(
    ctx: &AttackContext,
    template: &InputTemplate,
    tt: &TokenizedText,
    original_text: &str,
    original_embedding: &EmbeddingVector,
    state: &mut PerturbationState,
    position: usize,
    candidates: &[Candidate],
    label: usize,
    config: &AttackConfig,
    meter: &mut QueryMeter,
) -> Result<Option<SubstitutionRecord>> {
    if state.substitutions.contains_key(&position) {
        return Ok(None);
    }
    let mut best: Option<(f64, f64, &Candidate, String)> = None;
    for candidate in candidates {
        let spliced = state.splice_with(tt, position, &candidate.replacement)?;
        let similarity =
            metrics::semantic_similarity(original_embedding, &ctx.embedder.embed(&spliced))?;
        if similarity < config.sim_threshold {
            continue;
        }
        if !search_budget_left(meter, config) {
            break;
        }
        let objective = adversarial_objective(
            ctx.model,
            ctx.embedder,
            template,
            original_text,
            &spliced,
            label,
            config.lambda,
            meter,
        )?;
        if best.as_ref().map_or(true, |(j, ..)| objective > *j) {
            best = Some((objective, similarity, candidate, spliced));
        }
    }
    let Some((objective, similarity, candidate, spliced)) = best else {
        return Ok(None);
    };
    if objective <= state.objective {
        return Ok(None);
    }
    state.substitutions.insert(position, candidate.clone());
    state.current_text = spliced;
    state.objective = objective;
    state.similarity = similarity;
    state.meter_snapshot = (meter.forward_queries(), meter.gradient_queries());
    Ok(Some(SubstitutionRecord {
        position,
        original: tt.tokens[position].surface.clone(),
        replacement: candidate.replacement.clone(),
        objective_after: objective,
    }))
}

/// Saliency-ranked perturbable positions for the current text, or `None`
/// when the model lacks gradients and the remaining budget cannot cover a
/// full deletion pass.
fn ranked_positions(
    ctx: &AttackContext,
    template: &InputTemplate,
    tt: &TokenizedText,
    current_text: &str,
    label: usize,
    config: &AttackConfig,
    meter: &mut QueryMeter,
) -> Result<Option<Vec<usize>>> {
    let input = template.assemble(current_text);
    let profile = if ctx.model.supports_gradients() {
        saliency::gradient_saliency(ctx.model, &input, template.role, label, meter)?
    } else {
        let probe_cost = 1 + tt.word_count() as u64;
        if search_budget_remaining(meter, config) < probe_cost {
            return Ok(None);
        }
        saliency::deletion_saliency(ctx.model, &input, template.role, label, meter)?
    };
    saliency::rank_positions(&profile, tt, config.position_filters()).map(Some)
}

/// Runs the full DCP attack on one example.
///
/// Procedure: clean check (skip if already misclassified), saliency over
/// the clean input (gradient when supported, deletion probing otherwise),
/// greedy refinement position by position with a flip re-check after each
/// adoption, then a final validation query on the perturbed text. Stops at
/// the first flip, the substitution cap, the query budget, or position
/// exhaustion, whichever comes first.
pub fn run_dcp_attack(
    ctx: &AttackContext,
    example: &Example,
    target: AttackTarget,
    config: &AttackConfig,
) -> Result<AttackResult> {
    config.validate()?;
    if example.label >= ctx.model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label: example.label,
            num_labels: ctx.model.num_labels(),
        });
    }
    let (original_text, template) = InputTemplate::from_example(example, target)?;
    let tt = ctx.tokenizer.annotate(&original_text);
    let word_count = tt.word_count();
    let mut meter = QueryMeter::new();

    let probs = victim::predict_proba(ctx.model, &template.assemble(&original_text), &mut meter)?;
    let original_label = victim::argmax(&probs);
    if original_label != example.label {
        return Ok(skipped_result(
            ctx,
            &template,
            AttackMethod::Dcp,
            target,
            example,
            &original_text,
            original_label,
            word_count,
            &meter,
        ));
    }

    // The unperturbed objective is the clean loss (zero drift), reusing the
    // clean-check distribution instead of a second query.
    let clean_loss = -(probs[example.label].max(1e-300)).ln();
    let original_embedding = ctx.embedder.embed(&original_text);
    let self_similarity =
        metrics::semantic_similarity(&original_embedding, &original_embedding)?;
    let mut state = PerturbationState::initial(&original_text, clean_loss, self_similarity, &meter);

    let mut pending: VecDeque<usize> = match ranked_positions(
        ctx,
        &template,
        &tt,
        &original_text,
        example.label,
        config,
        &mut meter,
    )? {
        Some(ranked) => ranked.into(),
        // Deletion saliency unaffordable under the budget: no search possible.
        None => VecDeque::new(),
    };

    let cap = config.substitution_cap(word_count);
    let cand_config = config.candidate_config();
    let mut trace: Vec<SubstitutionRecord> = Vec::new();
    let mut visited: HashSet<usize> = HashSet::new();

    while let Some(position) = pending.pop_front() {
        if trace.len() >= cap || !search_budget_left(&meter, config) {
            break;
        }
        visited.insert(position);
        let candidates = ctx.candidates.gather(&tt, position, &cand_config);
        if candidates.is_empty() {
            continue;
        }
        let adopted = refine_position(
            ctx,
            &template,
            &tt,
            &original_text,
            &original_embedding,
            &mut state,
            position,
            &candidates,
            example.label,
            config,
            &mut meter,
        )?;
        let Some(record) = adopted else {
            continue;
        };
        trace.push(record);

        // Flip re-check; budget-gated like every other search query.
        if !search_budget_left(&meter, config) {
            break;
        }
        let probs = victim::predict_proba(
            ctx.model,
            &template.assemble(&state.current_text),
            &mut meter,
        )?;
        if victim::argmax(&probs) != example.label {
            break;
        }

        if config.recompute_saliency && !pending.is_empty() {
            let tt_current = ctx.tokenizer.annotate(&state.current_text);
            if let Some(ranked) = ranked_positions(
                ctx,
                &template,
                &tt_current,
                &state.current_text,
                example.label,
                config,
                &mut meter,
            )? {
                pending = ranked
                    .into_iter()
                    .filter(|p| !visited.contains(p))
                    .collect();
            }
        }
    }

    finish_result(
        ctx,
        &template,
        AttackMethod::Dcp,
        target,
        example,
        &original_text,
        original_label,
        state.current_text,
        trace,
        word_count,
        &mut meter,
    )
}
