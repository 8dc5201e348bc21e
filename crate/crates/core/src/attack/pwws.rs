//! The probability-weighted word saliency baseline. Positions are scored
//! once on the clean input (deletion saliency softmaxed over perturbable
//! positions, times each position's best gold-probability drop) and the
//! best candidates are then applied unconditionally in score order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::candidates::Candidate;
use crate::corpus::{AttackTarget, Example};
use crate::error::{Error, Result};
use crate::saliency;
use crate::textproc::{detokenize, TokenizedText};
use crate::victim::{self, QueryMeter, VictimModel};

use super::{
    finish_result, search_budget_left, search_budget_remaining, skipped_result, AttackConfig,
    AttackContext, AttackMethod, AttackResult, InputTemplate, SubstitutionRecord,
};

/// One position's ranking entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwwsScore {
    /// Token index in the attacked field's tokenization.
    pub position: usize,
    /// The candidate with the largest gold-probability drop; `None` when
    /// the position has no candidates.
    pub best_candidate: Option<Candidate>,
    /// Largest drop in gold probability over the position's candidates.
    pub delta_p: f64,
    /// softmax-over-positions(deletion saliency) × `delta_p`; negative
    /// infinity when the position has no candidates, so it sorts last.
    pub weighted_score: f64,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Scores every perturbable position on the clean input.
///
/// Consumes exactly `1 + W + ΣC_i` forward queries: one base prediction,
/// one deletion probe per word token, and one probe per candidate. The
/// softmax runs over all perturbable positions, so candidate-less
/// positions still dilute the weights even though they rank last. Ties
/// break by ascending position. An empty position map costs nothing.
pub fn pwws_rank(
    model: &dyn VictimModel,
    template: &InputTemplate,
    tt: &TokenizedText,
    label: usize,
    candidates_by_position: &BTreeMap<usize, Vec<Candidate>>,
    meter: &mut QueryMeter,
) -> Result<Vec<PwwsScore>> {
    if candidates_by_position.is_empty() {
        return Ok(Vec::new());
    }
    let input = template.assemble(&tt.original);
    let (profile, base) = saliency::deletion_probe(model, &input, template.role, label, meter)?;

    // The profile holds one score per word token; map token index → score.
    let score_of: HashMap<usize, f64> = tt
        .word_positions()
        .into_iter()
        .zip(profile.scores.iter().copied())
        .collect();
    let positions: Vec<usize> = candidates_by_position.keys().copied().collect();
    let saliency_scores: Vec<f64> = positions
        .iter()
        .map(|pos| {
            score_of.get(pos).copied().ok_or(Error::PositionOutOfRange {
                position: *pos,
                len: tt.tokens.len(),
            })
        })
        .collect::<Result<_>>()?;
    let weights = softmax(&saliency_scores);

    let mut scores = Vec::with_capacity(positions.len());
    for (idx, &position) in positions.iter().enumerate() {
        let candidates = &candidates_by_position[&position];
        let mut best: Option<(&Candidate, f64)> = None;
        for candidate in candidates {
            let subs = BTreeMap::from([(position, candidate.replacement.clone())]);
            let swapped = detokenize(tt, &subs)?;
            let probs =
                victim::predict_proba(model, &template.assemble(&swapped), meter)?;
            let drop = base[label] - probs[label];
            if best.map_or(true, |(_, d)| drop > d) {
                best = Some((candidate, drop));
            }
        }
        let (best_candidate, delta_p, weighted_score) = match best {
            Some((candidate, drop)) => (Some(candidate.clone()), drop, weights[idx] * drop),
            None => (None, 0.0, f64::NEG_INFINITY),
        };
        scores.push(PwwsScore {
            position,
            best_candidate,
            delta_p,
            weighted_score,
        });
    }

    scores.sort_by(|a, b| {
        b.weighted_score
            .partial_cmp(&a.weighted_score)
            .unwrap_or(Ordering::Equal)
            .then(a.position.cmp(&b.position))
    });
    Ok(scores)
}

/// Runs the full PWWS attack on one example.
///
/// After the shared clean check, every perturbable position's candidates
/// are gathered and ranked once via [`pwws_rank`]; each position's best
/// candidate is then applied unconditionally in descending score order,
/// with a prediction re-check after every swap. Stops at the first flip,
/// the substitution cap, the query budget, or when ranked positions run
/// out. Results use the same shape and conventions as the DCP attack.
pub fn run_pwws_attack(
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
            AttackMethod::Pwws,
            target,
            example,
            &original_text,
            original_label,
            word_count,
            &meter,
        ));
    }

    let cand_config = config.candidate_config();
    let mut by_position: BTreeMap<usize, Vec<Candidate>> = BTreeMap::new();
    for position in saliency::perturbable_positions(&tt, config.position_filters()) {
        by_position.insert(position, ctx.candidates.gather(&tt, position, &cand_config));
    }

    // The ranking pass is all-or-nothing; without budget for it, there is
    // no principled order to apply swaps in, so nothing is attempted.
    let rank_cost = 1
        + word_count as u64
        + by_position.values().map(|c| c.len() as u64).sum::<u64>();
    let scores = if by_position.is_empty()
        || search_budget_remaining(&meter, config) < rank_cost
    {
        Vec::new()
    } else {
        pwws_rank(
            ctx.model,
            &template,
            &tt,
            example.label,
            &by_position,
            &mut meter,
        )?
    };

    let cap = config.substitution_cap(word_count);
    let mut substitutions: BTreeMap<usize, String> = BTreeMap::new();
    let mut trace: Vec<SubstitutionRecord> = Vec::new();
    let mut current_text = original_text.clone();

    for score in &scores {
        let Some(candidate) = &score.best_candidate else {
            // Candidate-less positions sort last; nothing further to apply.
            break;
        };
        if trace.len() >= cap || !search_budget_left(&meter, config) {
            break;
        }
        substitutions.insert(score.position, candidate.replacement.clone());
        current_text = detokenize(&tt, &substitutions)?;
        let probs = victim::predict_proba(
            ctx.model,
            &template.assemble(&current_text),
            &mut meter,
        )?;
        trace.push(SubstitutionRecord {
            position: score.position,
            original: tt.tokens[score.position].surface.clone(),
            replacement: candidate.replacement.clone(),
            objective_after: -(probs[example.label].max(1e-300)).ln(),
        });
        if victim::argmax(&probs) != example.label {
            break;
        }
    }

    finish_result(
        ctx,
        &template,
        AttackMethod::Pwws,
        target,
        example,
        &original_text,
        original_label,
        current_text,
        trace,
        word_count,
        &mut meter,
    )
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{
        bare_tokenizer, planted_embedder, planted_generator, planted_victim, TableVictim,
    };
    use super::super::{run_dcp_attack, AttackContext};
    use super::*;
    use crate::candidates::{CandidateGenerator, Thesaurus};
    use crate::corpus::SegmentRole;
    use crate::victim::{ConstantVictim, ModelInput};

    fn classify_example(text: &str, label: usize) -> Example {
        Example::classify("e1", text, label, vec!["negative".into(), "positive".into()])
    }

    fn relaxed(config: AttackConfig) -> AttackConfig {
        AttackConfig {
            sim_threshold: -1.0,
            ..config
        }
    }

    fn classify_template() -> InputTemplate {
        InputTemplate {
            role: SegmentRole::Text,
            frozen: Vec::new(),
        }
    }

    fn gathered(
        generator: &CandidateGenerator,
        tt: &TokenizedText,
        config: &AttackConfig,
    ) -> BTreeMap<usize, Vec<Candidate>> {
        saliency::perturbable_positions(tt, config.position_filters())
            .into_iter()
            .map(|pos| (pos, generator.gather(tt, pos, &config.candidate_config())))
            .collect()
    }

    #[test]
    fn single_perturbable_position_gets_full_softmax_weight() {
        let mut model = TableVictim::new(vec![0.8, 0.2]);
        model.set("good .", vec![0.8, 0.2]);
        model.set("dull .", vec![0.3, 0.7]);
        model.set("fine .", vec![0.6, 0.4]);
        let generator = CandidateGenerator::new(
            Thesaurus::parse("good\tadj\tdull,fine\n"),
            Default::default(),
        );
        let tokenizer = bare_tokenizer();
        let tt = tokenizer.annotate("good .");
        let config = relaxed(AttackConfig::default());
        let by_position = gathered(&generator, &tt, &config);
        assert_eq!(by_position.len(), 1);

        let mut meter = QueryMeter::new();
        let scores =
            pwws_rank(&model, &classify_template(), &tt, 0, &by_position, &mut meter).unwrap();
        assert_eq!(scores.len(), 1);
        let s = &scores[0];
        assert_eq!(s.position, 0);
        assert!((s.delta_p - 0.5).abs() < 1e-12);
        // One-position softmax weight is exactly 1.
        assert!((s.weighted_score - s.delta_p).abs() < 1e-12);
        assert_eq!(s.best_candidate.as_ref().unwrap().replacement, "dull");
        // 1 base + 1 deletion probe + 2 candidate probes.
        assert_eq!(meter.forward_queries(), 4);
    }

    #[test]
    fn constant_victim_scores_zero_in_index_order() {
        let model = ConstantVictim::new(vec![0.5, 0.5]);
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let tt = tokenizer.annotate("bad weak film");
        let config = relaxed(AttackConfig::default());
        let by_position = gathered(&generator, &tt, &config);

        let mut meter = QueryMeter::new();
        let scores =
            pwws_rank(&model, &classify_template(), &tt, 0, &by_position, &mut meter).unwrap();
        assert_eq!(scores.len(), 3);
        for (i, s) in scores.iter().enumerate() {
            assert_eq!(s.position, [0, 1, 2][i]);
            assert_eq!(s.delta_p, 0.0);
            assert_eq!(s.weighted_score, 0.0);
        }
    }

    #[test]
    fn ranking_costs_exactly_one_plus_words_plus_candidates() {
        let model = planted_victim(1.0);
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let tt = tokenizer.annotate("bad weak film");
        let config = relaxed(AttackConfig::default());
        let by_position = gathered(&generator, &tt, &config);
        let total_candidates: usize = by_position.values().map(Vec::len).sum();
        assert_eq!(total_candidates, 5);

        let mut meter = QueryMeter::new();
        pwws_rank(&model, &classify_template(), &tt, 0, &by_position, &mut meter).unwrap();
        assert_eq!(
            meter.forward_queries(),
            (1 + tt.word_count() + total_candidates) as u64
        );
        assert_eq!(meter.gradient_queries(), 0);
    }

    #[test]
    fn scores_match_an_independent_recomputation() {
        let model = planted_victim(1.3);
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let text = "bad weak film";
        let tt = tokenizer.annotate(text);
        let config = relaxed(AttackConfig::default());
        let by_position = gathered(&generator, &tt, &config);

        let mut meter = QueryMeter::new();
        let scores =
            pwws_rank(&model, &classify_template(), &tt, 0, &by_position, &mut meter).unwrap();

        // Oracle: replay every probe with raw calls and a private softmax.
        let probe = |t: &str| model.raw_predict_proba(&ModelInput::classify(t)).unwrap()[0];
        let base = probe(text);
        let words: Vec<&str> = text.split(' ').collect();
        let splice = |i: usize, w: &str| {
            let mut parts = words.clone();
            parts[i] = w;
            parts.join(" ")
        };
        let saliency: Vec<f64> = (0..3).map(|i| base - probe(&splice(i, "unk"))).collect();
        let max = saliency.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = saliency.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        for score in &scores {
            let candidates = &by_position[&score.position];
            let drops: Vec<f64> = candidates
                .iter()
                .map(|c| base - probe(&splice(score.position, &c.replacement.to_lowercase())))
                .collect();
            let best = drops.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((score.delta_p - best).abs() < 1e-12);
            let weight = exps[score.position] / z;
            assert!((score.weighted_score - weight * best).abs() < 1e-12);
        }
        // Descending weighted order.
        for pair in scores.windows(2) {
            assert!(pair[0].weighted_score >= pair[1].weighted_score);
        }
    }

    #[test]
    fn candidate_less_positions_dilute_softmax_but_sort_last() {
        // "mediocre" has no candidate sources; it must still soak up
        // softmax mass and appear at the tail with -inf.
        let model = planted_victim(1.0);
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let tt = tokenizer.annotate("bad mediocre film");
        let config = relaxed(AttackConfig::default());
        let by_position = gathered(&generator, &tt, &config);
        assert!(by_position[&1].is_empty());

        let mut meter = QueryMeter::new();
        let scores =
            pwws_rank(&model, &classify_template(), &tt, 0, &by_position, &mut meter).unwrap();
        assert_eq!(scores.len(), 3);
        let last = scores.last().unwrap();
        assert_eq!(last.position, 1);
        assert!(last.best_candidate.is_none());
        assert_eq!(last.weighted_score, f64::NEG_INFINITY);

        // With three positions in the denominator, no weight reaches 1, so
        // every weighted score is strictly below its delta_p.
        for s in &scores[..2] {
            if s.delta_p > 0.0 {
                assert!(s.weighted_score < s.delta_p);
            }
        }
    }

    #[test]
    fn skipped_convention_matches_dcp() {
        let model = planted_victim(2.0);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("bad awful film", 1);
        let result =
            run_pwws_attack(&ctx, &example, AttackTarget::Text, &AttackConfig::default()).unwrap();
        assert!(result.skipped);
        assert!(!result.success);
        assert!(result.trace.is_empty());
        assert_eq!(result.forward_queries, 1);
        assert_eq!(result.attack, AttackMethod::Pwws);
    }

    #[test]
    fn constant_victim_attack_fails() {
        let model = ConstantVictim::new(vec![0.6, 0.4]);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("good film", 0);
        let config = relaxed(AttackConfig::default());
        let result = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        assert!(!result.success);
        assert!(!result.skipped);
        assert!(result.forward_queries <= config.max_forward_queries + 2);
    }

    #[test]
    fn single_swap_flip_matches_dcp_outcome() {
        let model = planted_victim(2.0);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("good film", 1);
        let config = relaxed(AttackConfig {
            lambda: 0.1,
            ..AttackConfig::default()
        });
        let pwws = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        let dcp = run_dcp_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        assert!(pwws.success);
        assert_eq!(pwws.trace.len(), 1);
        assert_eq!(pwws.adversarial_text, dcp.adversarial_text);
        assert_eq!(pwws.adversarial_label, dcp.adversarial_label);
    }

    #[test]
    fn swaps_apply_unconditionally_in_weighted_order() {
        // No flip is reachable; PWWS must still burn through the cap,
        // applying even swaps that'd fail a similarity gate.
        let model = planted_victim(0.5);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("bad weak film", 0);
        let config = AttackConfig {
            sim_threshold: 0.999,
            max_substitution_fraction: 1.0,
            ..AttackConfig::default()
        };
        let result = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        assert!(!result.success);
        assert_eq!(result.trace.len(), 3);
    }

    #[test]
    fn substitution_cap_stops_the_application_phase() {
        let model = planted_victim(0.5);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("bad weak film acting", 0);
        let config = relaxed(AttackConfig::default());
        let result = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        assert_eq!(config.substitution_cap(4), 1);
        assert_eq!(result.trace.len(), 1);
        assert!(!result.success);
    }

    #[test]
    fn unaffordable_ranking_attempts_nothing() {
        let model = planted_victim(0.5);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("bad weak film", 0);
        // Ranking needs 1 + 3 + 5 = 9 forwards; grant 8.
        let config = relaxed(AttackConfig {
            max_forward_queries: 8,
            ..AttackConfig::default()
        });
        let result = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
        assert!(!result.success);
        assert!(result.trace.is_empty());
        assert_eq!(result.forward_queries, 1);
        assert_eq!(result.adversarial_text, result.original_text);
    }

    #[test]
    fn budget_invariant_holds_across_small_budgets() {
        let model = planted_victim(0.5);
        let embedder = planted_embedder();
        let generator = planted_generator();
        let tokenizer = bare_tokenizer();
        let ctx = AttackContext {
            model: &model,
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let example = classify_example("bad weak film", 0);
        for budget in [1, 9, 10, 11, 50] {
            let config = relaxed(AttackConfig {
                max_forward_queries: budget,
                max_substitution_fraction: 1.0,
                ..AttackConfig::default()
            });
            let result = run_pwws_attack(&ctx, &example, AttackTarget::Text, &config).unwrap();
            assert!(
                result.forward_queries <= budget + 2,
                "budget {budget}: spent {}",
                result.forward_queries
            );
        }
    }
}
