//! Word-substitution attacks against a victim classifier.
//!
//! Two search strategies share this module's configuration, result type,
//! and query accounting:
//! - [`run_dcp_attack`]: saliency-ordered greedy search that maximizes
//!   `J = L_model − λ·L_sim`, trading misclassification pressure against
//!   embedding drift, with a cosine-similarity acceptance gate;
//! - [`run_pwws_attack`]: the probability-weighted word saliency baseline,
//!   which ranks (position, candidate) pairs once and applies them
//!   unconditionally in rank order.
//!
//! Query accounting convention, shared by both: the opening clean check is
//! not charged against `max_forward_queries`, one closing validation query
//! is reserved, and every search-phase forward is budget-gated, so a
//! result's `forward_queries` never exceeds `max_forward_queries + 2`.

mod dcp;
mod pwws;

pub use dcp::{refine_position, run_dcp_attack, PerturbationState};
pub use pwws::{pwws_rank, run_pwws_attack, PwwsScore};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateConfig, CandidateGenerator, CandidateSource};
use crate::corpus::{self, AttackTarget, Example, SegmentRole};
use crate::error::{Error, Result};
use crate::metrics;
use crate::saliency::PositionFilters;
use crate::textproc::Tokenizer;
use crate::victim::{
    self, EmbeddingVector, ModelInput, QueryMeter, TextEmbedder, VictimModel,
};

/// Which search strategy produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMethod {
    Dcp,
    Pwws,
}

impl fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackMethod::Dcp => "dcp",
            AttackMethod::Pwws => "pwws",
        })
    }
}

/// Knobs shared by both attacks. `lambda` and `sim_threshold` only steer
/// the DCP objective and gate; the candidate caps, position filters, and
/// budgets apply to both so comparison runs stay fair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Weight of the embedding-drift penalty in the DCP objective.
    pub lambda: f64,
    /// Minimum cosine similarity to the original text a DCP splice must
    /// keep to be adoptable.
    pub sim_threshold: f64,
    /// Fraction of words that may be substituted; the cap rounds up, so at
    /// least one substitution is always allowed.
    pub max_substitution_fraction: f64,
    /// Search-phase forward-query budget per example.
    pub max_forward_queries: u64,
    pub sources: Vec<CandidateSource>,
    pub per_source_cap: usize,
    pub total_cap: usize,
    pub exclude_stopwords: bool,
    /// Recompute saliency on the perturbed text after each adoption and
    /// re-rank the remaining positions. Off by default: saliency is
    /// computed once on the clean input.
    pub recompute_saliency: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            lambda: 1.0,
            sim_threshold: 0.85,
            max_substitution_fraction: 0.25,
            max_forward_queries: 3000,
            sources: vec![
                CandidateSource::Thesaurus,
                CandidateSource::Homophone,
                CandidateSource::Mlm,
            ],
            per_source_cap: 10,
            total_cap: 20,
            exclude_stopwords: true,
            recompute_saliency: false,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidConfig {
                reason: reason.into(),
            })
        };
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return fail("lambda must be a finite non-negative number");
        }
        if !self.sim_threshold.is_finite()
            || !(-1.0..=1.0).contains(&self.sim_threshold)
        {
            return fail("sim_threshold must lie in [-1, 1]");
        }
        if !self.max_substitution_fraction.is_finite()
            || self.max_substitution_fraction <= 0.0
            || self.max_substitution_fraction > 1.0
        {
            return fail("max_substitution_fraction must lie in (0, 1]");
        }
        if self.max_forward_queries == 0 {
            return fail("max_forward_queries must be at least 1");
        }
        if self.sources.is_empty() {
            return fail("at least one candidate source is required");
        }
        if self.per_source_cap == 0 || self.total_cap == 0 {
            return fail("candidate caps must be at least 1");
        }
        Ok(())
    }

    pub fn candidate_config(&self) -> CandidateConfig {
        CandidateConfig {
            sources: self.sources.clone(),
            per_source_cap: self.per_source_cap,
            total_cap: self.total_cap,
        }
    }

    pub fn position_filters(&self) -> PositionFilters {
        PositionFilters {
            exclude_stopwords: self.exclude_stopwords,
            exclude_non_words: true,
        }
    }

    /// Maximum substitutions for a text of `word_count` words, rounding up.
    pub fn substitution_cap(&self, word_count: usize) -> usize {
        (self.max_substitution_fraction * word_count as f64).ceil() as usize
    }
}

/// One adopted substitution, in adoption order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRecord {
    /// Token index in the attacked field's tokenization.
    pub position: usize,
    pub original: String,
    pub replacement: String,
    /// The search objective after this substitution: `J` for DCP, the
    /// victim's loss on the gold label for PWWS.
    pub objective_after: f64,
}

/// Outcome of one attack on one example. `original_text` and
/// `adversarial_text` are the attacked field only; `context` carries the
/// untouched segments so the full victim input can be rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub example_id: String,
    pub attack: AttackMethod,
    pub target: AttackTarget,
    pub success: bool,
    /// The victim already misclassified the clean input; no attack was
    /// attempted. Skipped results always have an empty trace.
    pub skipped: bool,
    pub original_text: String,
    pub adversarial_text: String,
    pub gold_label: usize,
    /// The victim's prediction on the clean input.
    pub original_label: usize,
    /// The victim's prediction on the final adversarial text.
    pub adversarial_label: usize,
    pub trace: Vec<SubstitutionRecord>,
    pub forward_queries: u64,
    pub gradient_queries: u64,
    /// Embedding cosine between original and adversarial attacked field.
    pub similarity: f64,
    /// Percent of words substituted.
    pub perturbation_rate: f64,
    /// Word tokens in the attacked field.
    pub word_count: usize,
    pub context: Vec<(SegmentRole, String)>,
}

/// The attacked segment's role plus the frozen segments, enough to rebuild
/// a full victim input for any rewrite of the attacked text.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTemplate {
    pub role: SegmentRole,
    pub frozen: Vec<(SegmentRole, String)>,
}

impl InputTemplate {
    /// Splits an example into its attacked text and the reusable template.
    pub fn from_example(example: &Example, target: AttackTarget) -> Result<(String, Self)> {
        let (text, frozen) = corpus::select_attack_field(example, target)?;
        Ok((
            text,
            InputTemplate {
                role: SegmentRole::from(target),
                frozen,
            },
        ))
    }

    pub fn assemble(&self, attacked_text: &str) -> ModelInput {
        ModelInput::assemble(self.role, attacked_text, &self.frozen)
    }
}

/// Everything an attack needs besides the example itself. Both attacks in
/// a comparison run share one context, so they see identical candidate
/// sets and position filters.
pub struct AttackContext<'a> {
    pub model: &'a dyn VictimModel,
    pub embedder: &'a dyn TextEmbedder,
    pub tokenizer: &'a Tokenizer,
    pub candidates: &'a CandidateGenerator,
}

fn squared_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// The attacker's objective for a rewrite of the attacked field:
/// `J = L_model(perturbed, label) − λ·‖E(original) − E(perturbed)‖²`.
///
/// Raising the victim's loss helps the attacker; drifting away from the
/// original embedding costs λ per unit of squared distance. Higher is
/// better. Consumes exactly one forward query.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_objective(
    model: &dyn VictimModel,
    embedder: &dyn TextEmbedder,
    template: &InputTemplate,
    original: &str,
    perturbed: &str,
    label: usize,
    lambda: f64,
    meter: &mut QueryMeter,
) -> Result<f64> {
    let model_loss = victim::loss(model, &template.assemble(perturbed), label, meter)?;
    let drift = squared_distance(&embedder.embed(original), &embedder.embed(perturbed))?;
    Ok(model_loss - lambda * drift)
}

/// True while search-phase forwards may still be issued. The clean check
/// (always the first forward) is excluded from the cap.
pub(crate) fn search_budget_left(meter: &QueryMeter, config: &AttackConfig) -> bool {
    meter.forward_queries().saturating_sub(1) < config.max_forward_queries
}

/// Remaining search-phase forwards, for affordability prechecks on probe
/// batches that are all-or-nothing (deletion saliency, PWWS ranking).
pub(crate) fn search_budget_remaining(meter: &QueryMeter, config: &AttackConfig) -> u64 {
    config
        .max_forward_queries
        .saturating_sub(meter.forward_queries().saturating_sub(1))
}

/// Shared result assembly. When the trace is non-empty the final text is
/// re-queried once (the validation query) and success means that fresh
/// prediction differs from the gold label; an empty trace keeps the clean
/// prediction and can never be a success.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_result(
    ctx: &AttackContext,
    template: &InputTemplate,
    attack: AttackMethod,
    target: AttackTarget,
    example: &Example,
    original_text: &str,
    original_label: usize,
    adversarial_text: String,
    trace: Vec<SubstitutionRecord>,
    word_count: usize,
    meter: &mut QueryMeter,
) -> Result<AttackResult> {
    let (adversarial_label, success) = if trace.is_empty() {
        (original_label, false)
    } else {
        let probs = victim::predict_proba(
            ctx.model,
            &template.assemble(&adversarial_text),
            meter,
        )?;
        let label = victim::argmax(&probs);
        (label, label != example.label)
    };
    let similarity = metrics::semantic_similarity(
        &ctx.embedder.embed(original_text),
        &ctx.embedder.embed(&adversarial_text),
    )?;
    let perturbation_rate = if word_count == 0 {
        0.0
    } else {
        100.0 * trace.len() as f64 / word_count as f64
    };
    Ok(AttackResult {
        example_id: example.id.clone(),
        attack,
        target,
        success,
        skipped: false,
        original_text: original_text.to_string(),
        adversarial_text,
        gold_label: example.label,
        original_label,
        adversarial_label,
        trace,
        forward_queries: meter.forward_queries(),
        gradient_queries: meter.gradient_queries(),
        similarity,
        perturbation_rate,
        word_count,
        context: template.frozen.clone(),
    })
}

/// Result for an example the victim already got wrong: nothing attempted.
pub(crate) fn skipped_result(
    ctx: &AttackContext,
    template: &InputTemplate,
    attack: AttackMethod,
    target: AttackTarget,
    example: &Example,
    original_text: &str,
    original_label: usize,
    word_count: usize,
    meter: &QueryMeter,
) -> AttackResult {
    let embedding = ctx.embedder.embed(original_text);
    let similarity = metrics::semantic_similarity(&embedding, &embedding).unwrap_or(0.0);
    AttackResult {
        example_id: example.id.clone(),
        attack,
        target,
        success: false,
        skipped: true,
        original_text: original_text.to_string(),
        adversarial_text: original_text.to_string(),
        gold_label: example.label,
        original_label,
        adversarial_label: original_label,
        trace: Vec::new(),
        forward_queries: meter.forward_queries(),
        gradient_queries: meter.gradient_queries(),
        similarity,
        perturbation_rate: 0.0,
        word_count,
        context: template.frozen.clone(),
    }
}

/// Post-hoc acceptance test for one result: the attack succeeded, the
/// similarity clears the gate, the perturbation rate stays within the
/// exact fraction, and a fresh query on the adversarial text still flips.
///
/// The in-attack substitution cap rounds up, so a success can carry a rate
/// slightly above `100 × max_substitution_fraction` and fail here;
/// validation is deliberately the stricter test. Results that fail the
/// cheap gates are rejected without spending a query.
pub fn validate_example(
    model: &dyn VictimModel,
    result: &AttackResult,
    config: &AttackConfig,
    meter: &mut QueryMeter,
) -> Result<bool> {
    if !result.success
        || result.similarity < config.sim_threshold
        || result.perturbation_rate > 100.0 * config.max_substitution_fraction
    {
        return Ok(false);
    }
    let input = ModelInput::assemble(
        SegmentRole::from(result.target),
        &result.adversarial_text,
        &result.context,
    );
    let probs = victim::predict_proba(model, &input, meter)?;
    Ok(victim::argmax(&probs) != result.gold_label)
}


#[cfg(test)]
mod tests {
    use super::testutil::{TableEmbedder, TableVictim};
    use super::*;
    use crate::corpus::TaskKind;
    use crate::victim::ConstantVictim;

    fn classify_template() -> InputTemplate {
        InputTemplate {
            role: SegmentRole::Text,
            frozen: Vec::new(),
        }
    }

    #[test]
    fn default_config_is_valid() {
        let config = AttackConfig::default();
        assert!(config.validate().is_ok());
        assert_eq!(config.lambda, 1.0);
        assert_eq!(config.sim_threshold, 0.85);
        assert_eq!(config.max_substitution_fraction, 0.25);
        assert_eq!(config.max_forward_queries, 3000);
        assert!(config.exclude_stopwords);
        assert!(!config.recompute_saliency);
    }

    #[test]
    fn config_bounds_are_enforced() {
        for bad in [
            AttackConfig {
                lambda: -0.1,
                ..AttackConfig::default()
            },
            AttackConfig {
                sim_threshold: 1.5,
                ..AttackConfig::default()
            },
            AttackConfig {
                max_substitution_fraction: 0.0,
                ..AttackConfig::default()
            },
            AttackConfig {
                max_substitution_fraction: 1.1,
                ..AttackConfig::default()
            },
            AttackConfig {
                max_forward_queries: 0,
                ..AttackConfig::default()
            },
            AttackConfig {
                sources: vec![],
                ..AttackConfig::default()
            },
            AttackConfig {
                total_cap: 0,
                ..AttackConfig::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig { .. })));
        }
    }

    #[test]
    fn substitution_cap_rounds_up() {
        let config = AttackConfig::default();
        assert_eq!(config.substitution_cap(4), 1);
        assert_eq!(config.substitution_cap(8), 2);
        assert_eq!(config.substitution_cap(10), 3);
        let full = AttackConfig {
            max_substitution_fraction: 1.0,
            ..AttackConfig::default()
        };
        assert_eq!(full.substitution_cap(7), 7);
    }

    #[test]
    fn config_deserializes_with_partial_fields() {
        let config: AttackConfig = toml::from_str("lambda = 0.5\nsim_threshold = 0.9\n").unwrap();
        assert_eq!(config.lambda, 0.5);
        assert_eq!(config.sim_threshold, 0.9);
        assert_eq!(config.max_forward_queries, 3000);
    }

    #[test]
    fn unperturbed_objective_is_the_clean_loss() {
        let model = ConstantVictim::new(vec![0.5, 0.5]);
        let embedder = TableEmbedder::new(vec![1.0, 2.0]);
        let mut meter = QueryMeter::new();
        let j = adversarial_objective(
            &model,
            &embedder,
            &classify_template(),
            "same text",
            "same text",
            0,
            1.0,
            &mut meter,
        )
        .unwrap();
        assert!((j - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(meter.forward_queries(), 1);
    }

    #[test]
    fn objective_arithmetic_matches_hand_value() {
        // L_model = 1.2 (p_gold = e^-1.2), L_sim = 0.3, lambda = 0.5
        // => J = 1.2 - 0.5 * 0.3 = 1.05.
        let p = (-1.2f64).exp();
        let mut model = TableVictim::new(vec![0.5, 0.5]);
        model.set("after", vec![p, 1.0 - p]);
        let mut embedder = TableEmbedder::new(vec![0.0]);
        embedder.set("before", vec![0.0]);
        embedder.set("after", vec![0.3f64.sqrt()]);
        let mut meter = QueryMeter::new();
        let j = adversarial_objective(
            &model,
            &embedder,
            &classify_template(),
            "before",
            "after",
            0,
            0.5,
            &mut meter,
        )
        .unwrap();
        assert!((j - 1.05).abs() < 1e-9);
    }

    #[test]
    fn zero_lambda_reduces_to_model_loss_ordering() {
        let mut model = TableVictim::new(vec![0.5, 0.5]);
        model.set("a", vec![0.9, 0.1]);
        model.set("b", vec![0.3, 0.7]);
        model.set("c", vec![0.6, 0.4]);
        let embedder = TableEmbedder::new(vec![1.0]);
        let template = classify_template();
        let mut meter = QueryMeter::new();
        let j: Vec<f64> = ["a", "b", "c"]
            .iter()
            .map(|t| {
                adversarial_objective(&model, &embedder, &template, "a", t, 0, 0.0, &mut meter)
                    .unwrap()
            })
            .collect();
        // Loss order: b (p=0.3) > c (p=0.6) > a (p=0.9).
        assert!(j[1] > j[2] && j[2] > j[0]);
    }

    #[test]
    fn objective_rejects_bad_labels_without_querying() {
        let model = ConstantVictim::new(vec![0.5, 0.5]);
        let embedder = TableEmbedder::new(vec![1.0]);
        let mut meter = QueryMeter::new();
        let err = adversarial_objective(
            &model,
            &embedder,
            &classify_template(),
            "x",
            "y",
            7,
            1.0,
            &mut meter,
        );
        assert!(matches!(err, Err(Error::LabelOutOfRange { label: 7, .. })));
        assert_eq!(meter.forward_queries(), 0);
    }

    #[test]
    fn budget_gate_excludes_the_clean_check() {
        let config = AttackConfig {
            max_forward_queries: 2,
            ..AttackConfig::default()
        };
        let mut meter = QueryMeter::new();
        let model = ConstantVictim::new(vec![1.0]);
        // Clean check.
        victim::predict_proba(&model, &ModelInput::classify("x"), &mut meter).unwrap();
        assert!(search_budget_left(&meter, &config));
        assert_eq!(search_budget_remaining(&meter, &config), 2);
        // Two search queries exhaust the budget.
        victim::predict_proba(&model, &ModelInput::classify("x"), &mut meter).unwrap();
        victim::predict_proba(&model, &ModelInput::classify("x"), &mut meter).unwrap();
        assert!(!search_budget_left(&meter, &config));
        assert_eq!(search_budget_remaining(&meter, &config), 0);
    }

    fn success_result(similarity: f64, perturbation_rate: f64) -> AttackResult {
        AttackResult {
            example_id: "e".into(),
            attack: AttackMethod::Dcp,
            target: AttackTarget::Text,
            success: true,
            skipped: false,
            original_text: "good film".into(),
            adversarial_text: "dull film".into(),
            gold_label: 1,
            original_label: 1,
            adversarial_label: 0,
            trace: vec![SubstitutionRecord {
                position: 0,
                original: "good".into(),
                replacement: "dull".into(),
                objective_after: 1.0,
            }],
            forward_queries: 4,
            gradient_queries: 1,
            similarity,
            perturbation_rate,
            word_count: 2,
            context: Vec::new(),
        }
    }

    #[test]
    fn validation_accepts_only_gated_flipping_successes() {
        // Victim says label 0 everywhere, so the stored flip (gold 1) holds.
        let model = ConstantVictim::new(vec![0.9, 0.1]);
        let config = AttackConfig::default();
        let mut meter = QueryMeter::new();

        let ok = success_result(0.95, 10.0);
        assert!(validate_example(&model, &ok, &config, &mut meter).unwrap());
        assert_eq!(meter.forward_queries(), 1);

        let low_sim = success_result(0.70, 10.0);
        assert!(!validate_example(&model, &low_sim, &config, &mut meter).unwrap());

        let heavy = success_result(0.95, 30.0);
        assert!(!validate_example(&model, &heavy, &config, &mut meter).unwrap());

        let mut failed = success_result(0.95, 10.0);
        failed.success = false;
        assert!(!validate_example(&model, &failed, &config, &mut meter).unwrap());
        // The three rejected results spent no queries.
        assert_eq!(meter.forward_queries(), 1);
    }

    #[test]
    fn validation_requires_the_flip_to_hold_on_requery() {
        // Victim now answers the gold label everywhere: stored success is stale.
        let model = ConstantVictim::new(vec![0.1, 0.9]);
        let config = AttackConfig::default();
        let mut meter = QueryMeter::new();
        let stale = success_result(0.95, 10.0);
        assert!(!validate_example(&model, &stale, &config, &mut meter).unwrap());
        assert_eq!(meter.forward_queries(), 1);
    }

    #[test]
    fn template_round_trips_nli_examples() {
        let example = Example::nli(
            "n1",
            "A man walks his dog.",
            "Somebody is outside.",
            0,
            vec!["entailment".into(), "neutral".into(), "contradiction".into()],
        );
        let (text, template) = InputTemplate::from_example(&example, AttackTarget::Hypothesis).unwrap();
        assert_eq!(text, "Somebody is outside.");
        assert_eq!(template.role, SegmentRole::Hypothesis);
        let input = template.assemble("Nobody is outside.");
        assert_eq!(input.segment(SegmentRole::Premise), Some("A man walks his dog."));
        assert_eq!(input.segment(SegmentRole::Hypothesis), Some("Nobody is outside."));
        assert_eq!(input.segments[0].0, SegmentRole::Premise);

        let example = Example::classify("c1", "Fine film.", 1, vec!["neg".into(), "pos".into()]);
        assert!(matches!(
            InputTemplate::from_example(&example, AttackTarget::Premise),
            Err(Error::IncompatibleTarget { .. })
        ));
        assert_eq!(example.task_kind, TaskKind::Classify);
    }
}
