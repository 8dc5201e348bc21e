//! The victim-model abstraction: prediction, loss, token gradients, text
//! embedding, and query metering.
//!
//! Attacks never call a model directly; they go through the metered free
//! functions in this module so that every forward pass and gradient request
//! is tallied against the session's [`QueryMeter`]. Implementations expose
//! unmetered `raw_*` methods and stay oblivious to accounting.

mod reference;
mod wordvec;

pub use reference::{train_reference_victim, ReferenceVictim, TrainConfig};
pub use wordvec::{ReferenceEmbedder, WordVectors};

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentRole;
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;

/// Input to a victim model: one `text` segment for classification, or a
/// `premise` plus `hypothesis` pair for NLI, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInput {
    pub segments: Vec<(SegmentRole, String)>,
}

impl ModelInput {
    pub fn classify(text: impl Into<String>) -> Self {
        ModelInput {
            segments: vec![(SegmentRole::Text, text.into())],
        }
    }

    pub fn nli(premise: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        ModelInput {
            segments: vec![
                (SegmentRole::Premise, premise.into()),
                (SegmentRole::Hypothesis, hypothesis.into()),
            ],
        }
    }

    /// Builds an input from the attacked segment plus the frozen context,
    /// restoring canonical segment order (premise before hypothesis).
    pub fn assemble(
        target: SegmentRole,
        attacked_text: &str,
        frozen: &[(SegmentRole, String)],
    ) -> Self {
        let mut segments: Vec<(SegmentRole, String)> = frozen.to_vec();
        segments.push((target, attacked_text.to_string()));
        segments.sort_by_key(|(role, _)| *role);
        ModelInput { segments }
    }

    pub fn segment(&self, role: SegmentRole) -> Option<&str> {
        self.segments
            .iter()
            .find(|(r, _)| *r == role)
            .map(|(_, s)| s.as_str())
    }
}

/// Per-session tally of victim queries. Forward passes and gradient requests
/// are counted separately; reports show both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMeter {
    forward_queries: u64,
    gradient_queries: u64,
}

impl QueryMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward_queries(&self) -> u64 {
        self.forward_queries
    }

    pub fn gradient_queries(&self) -> u64 {
        self.gradient_queries
    }

    fn record_forward(&mut self) {
        self.forward_queries += 1;
    }

    fn record_gradient(&mut self) {
        self.gradient_queries += 1;
    }
}

/// A fixed-length real vector produced by a text embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Maps a text to a fixed-dimension embedding. The bundled reference
/// implementation averages static word vectors; contextual encoders can be
/// attached through the same interface.
pub trait TextEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> EmbeddingVector;
    fn descriptor(&self) -> String;
}

/// A model under attack. Implementations provide unmetered `raw_*`
/// operations; attack code accounts for queries via [`predict_proba`],
/// [`loss`], and [`token_gradients`].
pub trait VictimModel: Send + Sync {
    fn num_labels(&self) -> usize;

    /// True if `raw_token_gradients` is implemented. Callers fall back to
    /// deletion-based saliency when this is false.
    fn supports_gradients(&self) -> bool {
        false
    }

    /// Short human-readable identity for manifests and error messages.
    fn descriptor(&self) -> String;

    /// Stable fingerprint of the model parameters for run manifests.
    fn param_hash(&self) -> u64;

    /// Class distribution for the input: entries non-negative, summing to 1
    /// within 1e-6.
    fn raw_predict_proba(&self, input: &ModelInput) -> Result<Vec<f64>>;

    /// Gradient of the cross-entropy loss at `label` with respect to each
    /// word token's embedding in the `target` segment, one vector per word
    /// token (zero vectors for out-of-vocabulary words).
    fn raw_token_gradients(
        &self,
        _input: &ModelInput,
        _target: SegmentRole,
        _label: usize,
    ) -> Result<Vec<Vec<f64>>> {
        Err(Error::GradientsUnsupported {
            victim: self.descriptor(),
        })
    }
}

/// Metered prediction: exactly one forward query on success.
pub fn predict_proba(
    model: &dyn VictimModel,
    input: &ModelInput,
    meter: &mut QueryMeter,
) -> Result<Vec<f64>> {
    let probs = model.raw_predict_proba(input)?;
    meter.record_forward();
    Ok(probs)
}

/// Cross-entropy −ln p(label), metered as one forward query. The probability
/// is clamped away from zero so stub victims with hard zeros stay finite.
pub fn loss(
    model: &dyn VictimModel,
    input: &ModelInput,
    label: usize,
    meter: &mut QueryMeter,
) -> Result<f64> {
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            num_labels: model.num_labels(),
        });
    }
    let probs = predict_proba(model, input, meter)?;
    Ok(-probs[label].max(1e-300).ln())
}

/// Metered token gradients: exactly one gradient query on success.
pub fn token_gradients(
    model: &dyn VictimModel,
    input: &ModelInput,
    target: SegmentRole,
    label: usize,
    meter: &mut QueryMeter,
) -> Result<Vec<Vec<f64>>> {
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            num_labels: model.num_labels(),
        });
    }
    let grads = model.raw_token_gradients(input, target, label)?;
    meter.record_gradient();
    Ok(grads)
}

/// Index of the largest probability, first index on ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// A victim that answers every query with the same distribution. Useful as
/// an unflippable opponent in tests; optionally reports zero gradients.
#[derive(Debug, Clone)]
pub struct ConstantVictim {
    probs: Vec<f64>,
    zero_gradient_dim: Option<usize>,
}

impl ConstantVictim {
    pub fn new(probs: Vec<f64>) -> Self {
        ConstantVictim {
            probs,
            zero_gradient_dim: None,
        }
    }

    /// Same constant output, but claims gradient support and returns
    /// all-zero vectors of the given dimension.
    pub fn with_zero_gradients(probs: Vec<f64>, dim: usize) -> Self {
        ConstantVictim {
            probs,
            zero_gradient_dim: Some(dim),
        }
    }
}

impl VictimModel for ConstantVictim {
    fn num_labels(&self) -> usize {
        self.probs.len()
    }

    fn supports_gradients(&self) -> bool {
        self.zero_gradient_dim.is_some()
    }

    fn descriptor(&self) -> String {
        format!("constant-{}l", self.probs.len())
    }

    fn param_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        for p in &self.probs {
            h.update(&p.to_bits().to_le_bytes());
        }
        h.finish()
    }

    fn raw_predict_proba(&self, _input: &ModelInput) -> Result<Vec<f64>> {
        Ok(self.probs.clone())
    }

    fn raw_token_gradients(
        &self,
        input: &ModelInput,
        target: SegmentRole,
        _label: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let Some(dim) = self.zero_gradient_dim else {
            return Err(Error::GradientsUnsupported {
                victim: self.descriptor(),
            });
        };
        let text = input.segment(target).ok_or_else(|| Error::MalformedInput {
            reason: format!("input has no {target:?} segment"),
        })?;
        let words = crate::textproc::tokenize(text).word_count();
        Ok(vec![vec![0.0; dim]; words])
    }
}

/// Wraps any victim and counts successful raw calls with atomic counters.
/// Used to cross-check that [`QueryMeter`] accounting is exact.
pub struct InstrumentedVictim<M> {
    inner: M,
    forwards: AtomicU64,
    gradients: AtomicU64,
}

impl<M: VictimModel> InstrumentedVictim<M> {
    pub fn new(inner: M) -> Self {
        InstrumentedVictim {
            inner,
            forwards: AtomicU64::new(0),
            gradients: AtomicU64::new(0),
        }
    }

    /// (forward calls, gradient calls) observed so far.
    pub fn counts(&self) -> (u64, u64) {
        (
            self.forwards.load(Ordering::Relaxed),
            self.gradients.load(Ordering::Relaxed),
        )
    }

    pub fn reset(&self) {
        self.forwards.store(0, Ordering::Relaxed);
        self.gradients.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: VictimModel> VictimModel for InstrumentedVictim<M> {
    fn num_labels(&self) -> usize {
        self.inner.num_labels()
    }

    fn supports_gradients(&self) -> bool {
        self.inner.supports_gradients()
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }

    fn param_hash(&self) -> u64 {
        self.inner.param_hash()
    }

    fn raw_predict_proba(&self, input: &ModelInput) -> Result<Vec<f64>> {
        let probs = self.inner.raw_predict_proba(input)?;
        self.forwards.fetch_add(1, Ordering::Relaxed);
        Ok(probs)
    }

    fn raw_token_gradients(
        &self,
        input: &ModelInput,
        target: SegmentRole,
        label: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let grads = self.inner.raw_token_gradients(input, target, label)?;
        self.gradients.fetch_add(1, Ordering::Relaxed);
        Ok(grads)
    }
}
