//! Token-importance scoring: gradient magnitudes when the victim exposes
//! them, deletion probing otherwise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentRole;
use crate::error::{Error, Result};
use crate::textproc::{detokenize, tokenize, TokenizedText};
use crate::victim::{self, ModelInput, QueryMeter, VictimModel};

/// The out-of-vocabulary placeholder used for deletion probing. It is absent
/// from the bundled vector table by construction, so substituting it removes
/// the word's contribution entirely for the reference victim.
pub const UNK_TOKEN: &str = "unk";

/// How a profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencyMethod {
    Gradient,
    Deletion,
}

/// Importance scores, one per word token of the probed segment, in token
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyProfile {
    pub scores: Vec<f64>,
    pub method: SaliencyMethod,
}

/// Scores each word token by the L1 norm of its loss gradient. Costs exactly
/// one gradient query.
pub fn gradient_saliency(
    model: &dyn VictimModel,
    input: &ModelInput,
    target: SegmentRole,
    label: usize,
    meter: &mut QueryMeter,
) -> Result<SaliencyProfile> {
    let grads = victim::token_gradients(model, input, target, label, meter)?;
    let scores = grads
        .iter()
        .map(|g| g.iter().map(|v| v.abs()).sum())
        .collect();
    Ok(SaliencyProfile {
        scores,
        method: SaliencyMethod::Gradient,
    })
}

fn with_segment(input: &ModelInput, role: SegmentRole, content: String) -> ModelInput {
    let segments = input
        .segments
        .iter()
        .map(|(r, s)| {
            if *r == role {
                (*r, content.clone())
            } else {
                (*r, s.clone())
            }
        })
        .collect();
    ModelInput { segments }
}

/// Deletion probing shared by [`deletion_saliency`] and the PWWS ranking:
/// returns the profile together with the base distribution so callers can
/// reuse it without a second forward pass. Costs 1 + W forward queries for W
/// word tokens.
pub(crate) fn deletion_probe(
    model: &dyn VictimModel,
    input: &ModelInput,
    target: SegmentRole,
    label: usize,
    meter: &mut QueryMeter,
) -> Result<(SaliencyProfile, Vec<f64>)> {
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            num_labels: model.num_labels(),
        });
    }
    let text = input.segment(target).ok_or_else(|| Error::MalformedInput {
        reason: format!("input has no {target:?} segment"),
    })?;
    let tt = tokenize(text);
    let base = victim::predict_proba(model, input, meter)?;

    let mut scores = Vec::with_capacity(tt.word_count());
    for position in tt.word_positions() {
        let subs = BTreeMap::from([(position, UNK_TOKEN.to_string())]);
        let probed_text = detokenize(&tt, &subs)?;
        let probed = with_segment(input, target, probed_text);
        let probs = victim::predict_proba(model, &probed, meter)?;
        scores.push(base[label] - probs[label]);
    }
    Ok((
        SaliencyProfile {
            scores,
            method: SaliencyMethod::Deletion,
        },
        base,
    ))
}

/// Scores each word token by the gold-probability drop when it is replaced
/// with [`UNK_TOKEN`]. Black-box; costs 1 + W forward queries.
pub fn deletion_saliency(
    model: &dyn VictimModel,
    input: &ModelInput,
    target: SegmentRole,
    label: usize,
    meter: &mut QueryMeter,
) -> Result<SaliencyProfile> {
    deletion_probe(model, input, target, label, meter).map(|(profile, _)| profile)
}

/// Which token positions may be perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionFilters {
    pub exclude_stopwords: bool,
    pub exclude_non_words: bool,
}

impl Default for PositionFilters {
    fn default() -> Self {
        PositionFilters {
            exclude_stopwords: true,
            exclude_non_words: true,
        }
    }
}

/// Token positions admissible for perturbation under the filters, in
/// ascending order. Non-word tokens never qualify; `exclude_non_words`
/// exists so the filter set can be serialized faithfully.
pub fn perturbable_positions(tt: &TokenizedText, filters: PositionFilters) -> Vec<usize> {
    tt.word_positions()
        .into_iter()
        .filter(|&pos| !(filters.exclude_stopwords && tt.tokens[pos].is_stopword))
        .collect()
}

/// Orders token positions by saliency, descending, ties broken by ascending
/// position. The profile carries one score per word token; the returned
/// values are indices into `tt.tokens`. Only word tokens carry scores, so
/// non-word tokens never appear in the output regardless of filters.
pub fn rank_positions(
    profile: &SaliencyProfile,
    tt: &TokenizedText,
    filters: PositionFilters,
) -> Result<Vec<usize>> {
    let word_positions = tt.word_positions();
    if profile.scores.len() != word_positions.len() {
        return Err(Error::MisalignedProfile {
            scores: profile.scores.len(),
            words: word_positions.len(),
        });
    }
    let mut ranked: Vec<(usize, f64)> = word_positions
        .into_iter()
        .zip(profile.scores.iter().copied())
        .filter(|&(pos, _)| !(filters.exclude_stopwords && tt.tokens[pos].is_stopword))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(ranked.into_iter().map(|(pos, _)| pos).collect())
}
