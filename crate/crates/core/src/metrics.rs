//! Evaluation quantities for attack runs: success rate, accuracy under
//! attack, perturbation rate, embedding similarity, and Flesch-Kincaid
//! readability, plus the aggregate over a result list.
//!
//! Denominator conventions, applied consistently everywhere:
//! - attack_success_rate divides by clean-correct (non-skipped) examples;
//! - accuracy_under_attack divides by all examples, counting skipped ones
//!   as incorrect;
//! - perturbation rate, similarity, and readability delta average over
//!   successful attacks only and are absent (`None`) when nothing succeeded;
//! - query means average over non-skipped examples.

use serde::{Deserialize, Serialize};

use crate::attack::AttackResult;
use crate::error::{Error, Result};
use crate::textproc::{count_syllables, split_sentences, tokenize};
use crate::victim::EmbeddingVector;

/// Aggregate metrics for one (dataset, victim, attack) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Number of examples the run covered, including skipped ones.
    pub total_examples: usize,
    /// Percent of examples the victim classified correctly before attack.
    pub clean_accuracy: f64,
    /// Percent still classified correctly after attack; skipped examples
    /// count as incorrect, so this never exceeds `clean_accuracy`.
    pub accuracy_under_attack: f64,
    /// Percent of clean-correct examples the attack flipped.
    pub attack_success_rate: f64,
    /// Mean percent of words substituted, over successful attacks.
    pub mean_perturbation_rate: Option<f64>,
    /// Mean embedding cosine between original and adversarial text, over
    /// successful attacks.
    pub mean_similarity: Option<f64>,
    /// Mean forward queries per non-skipped example.
    pub mean_queries: f64,
    /// Mean gradient queries per non-skipped example, tallied separately
    /// from forwards so the two budgets stay distinguishable.
    pub mean_gradient_queries: f64,
    /// Mean (adversarial − original) Flesch-Kincaid grade, over successful
    /// attacks. Positive means the attack made the text harder to read.
    pub mean_readability_delta: Option<f64>,
}

impl RunMetrics {
    /// Field-wise comparison within `tol`. Optional fields must agree on
    /// presence; persisted metrics are checked against re-aggregation with
    /// this, so the tolerance bounds acceptable round-trip drift.
    pub fn approx_eq(&self, other: &RunMetrics, tol: f64) -> bool {
        fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
        fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
            match (a, b) {
                (None, None) => true,
                (Some(x), Some(y)) => close(x, y, tol),
                _ => false,
            }
        }
        self.total_examples == other.total_examples
            && close(self.clean_accuracy, other.clean_accuracy, tol)
            && close(self.accuracy_under_attack, other.accuracy_under_attack, tol)
            && close(self.attack_success_rate, other.attack_success_rate, tol)
            && close_opt(self.mean_perturbation_rate, other.mean_perturbation_rate, tol)
            && close_opt(self.mean_similarity, other.mean_similarity, tol)
            && close(self.mean_queries, other.mean_queries, tol)
            && close(self.mean_gradient_queries, other.mean_gradient_queries, tol)
            && close_opt(
                self.mean_readability_delta,
                other.mean_readability_delta,
                tol,
            )
    }
}

/// Percent of words changed: 100 × |trace| / word_count.
pub fn perturbation_rate(result: &AttackResult, word_count: usize) -> Result<f64> {
    if word_count == 0 {
        return Err(Error::NoWords);
    }
    Ok(100.0 * result.trace.len() as f64 / word_count as f64)
}

/// Percent of clean-correct examples whose prediction the attack flipped.
pub fn attack_success_rate(results: &[AttackResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let attempted = results.iter().filter(|r| !r.skipped).count();
    if attempted == 0 {
        return Err(Error::NoCleanCorrect);
    }
    let successes = results.iter().filter(|r| r.success).count();
    Ok(100.0 * successes as f64 / attempted as f64)
}

/// Percent of all examples still classified correctly after the attack.
pub fn accuracy_under_attack(results: &[AttackResult], total: usize) -> Result<f64> {
    if results.len() != total {
        return Err(Error::ResultCountMismatch {
            results: results.len(),
            total,
        });
    }
    if total == 0 {
        return Err(Error::EmptyResults);
    }
    let surviving = results.iter().filter(|r| !r.skipped && !r.success).count();
    Ok(100.0 * surviving as f64 / total as f64)
}

/// Percent of all examples the victim classified correctly before attack.
pub fn clean_accuracy(results: &[AttackResult], total: usize) -> Result<f64> {
    if results.len() != total {
        return Err(Error::ResultCountMismatch {
            results: results.len(),
            total,
        });
    }
    if total == 0 {
        return Err(Error::EmptyResults);
    }
    let correct = results.iter().filter(|r| !r.skipped).count();
    Ok(100.0 * correct as f64 / total as f64)
}

/// Cosine over raw slices. Callers guarantee equal length; either vector
/// being all-zero yields 0.0.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Cosine similarity between two embeddings, 0.0 when either is all-zero.
pub fn semantic_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(cosine(&a.values, &b.values))
}

/// Flesch-Kincaid grade level:
/// 0.39 × (words / sentences) + 11.8 × (syllables / words) − 15.59.
///
/// Words are word tokens; sentences come from [`split_sentences`] with a
/// floor of one; a word with no letters (a number) counts one syllable.
pub fn flesch_kincaid_grade(text: &str) -> Result<f64> {
    let tt = tokenize(text);
    let words: Vec<&str> = tt
        .tokens
        .iter()
        .filter(|t| t.is_word)
        .map(|t| t.surface.as_str())
        .collect();
    if words.is_empty() {
        return Err(Error::NoWords);
    }
    let sentences = split_sentences(text).len().max(1);
    let syllables: usize = words
        .iter()
        .map(|w| count_syllables(w).unwrap_or(1))
        .sum();
    Ok(0.39 * words.len() as f64 / sentences as f64
        + 11.8 * syllables as f64 / words.len() as f64
        - 15.59)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0_f64, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates a full result list into [`RunMetrics`]. Deterministic given
/// the results, so metrics can be recomputed from persisted JSONL and
/// checked against the stored summary.
pub fn aggregate(results: &[AttackResult], total: usize) -> Result<RunMetrics> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let clean = clean_accuracy(results, total)?;
    let under_attack = accuracy_under_attack(results, total)?;
    let asr = attack_success_rate(results)?;

    let successes: Vec<&AttackResult> = results.iter().filter(|r| r.success).collect();
    let attempted: Vec<&AttackResult> = results.iter().filter(|r| !r.skipped).collect();

    let readability_delta = mean(successes.iter().filter_map(|r| {
        let before = flesch_kincaid_grade(&r.original_text).ok()?;
        let after = flesch_kincaid_grade(&r.adversarial_text).ok()?;
        Some(after - before)
    }));

    Ok(RunMetrics {
        total_examples: total,
        clean_accuracy: clean,
        accuracy_under_attack: under_attack,
        attack_success_rate: asr,
        mean_perturbation_rate: mean(successes.iter().map(|r| r.perturbation_rate)),
        mean_similarity: mean(successes.iter().map(|r| r.similarity)),
        mean_queries: mean(attempted.iter().map(|r| r.forward_queries as f64)).unwrap_or(0.0),
        mean_gradient_queries: mean(attempted.iter().map(|r| r.gradient_queries as f64))
            .unwrap_or(0.0),
        mean_readability_delta: readability_delta,
    })
}
