//! A self-contained trainable victim: multinomial logistic regression over
//! mean static word vectors, with analytic per-token gradients.
//!
//! Classification uses the mean vector of the text; NLI concatenates the
//! premise mean and the hypothesis mean, so each segment owns a block of the
//! feature vector and gradients flow back per segment.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::corpus::{Dataset, SegmentRole, TaskKind};
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::rng::XorShift64;
use crate::victim::{ModelInput, ReferenceEmbedder, VictimModel, WordVectors};

/// Training hyperparameters. Full-batch gradient descent; the seed fixes the
/// weight initialization, so identical configs give bit-identical models.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.5,
            seed: 42,
        }
    }
}

/// The trained reference victim.
pub struct ReferenceVictim {
    vectors: Arc<WordVectors>,
    embedder: ReferenceEmbedder,
    task: TaskKind,
    label_names: Vec<String>,
    /// One row per label, `feature_dim` columns.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl ReferenceVictim {
    fn feature_dim(task: TaskKind, dim: usize) -> usize {
        match task {
            TaskKind::Classify => dim,
            TaskKind::Nli => 2 * dim,
        }
    }

    /// Segment roles this victim consumes, in feature-block order.
    fn roles(&self) -> &'static [SegmentRole] {
        match self.task {
            TaskKind::Classify => &[SegmentRole::Text],
            TaskKind::Nli => &[SegmentRole::Premise, SegmentRole::Hypothesis],
        }
    }

    /// Byte offset of a segment's block within the feature vector, or an
    /// input error when the role does not belong to this victim's task.
    fn block_offset(&self, role: SegmentRole) -> Result<usize> {
        let dim = self.vectors.dim();
        match (self.task, role) {
            (TaskKind::Classify, SegmentRole::Text) => Ok(0),
            (TaskKind::Nli, SegmentRole::Premise) => Ok(0),
            (TaskKind::Nli, SegmentRole::Hypothesis) => Ok(dim),
            _ => Err(Error::MalformedInput {
                reason: format!("segment {role:?} is not part of a {} input", self.task),
            }),
        }
    }

    fn features(&self, input: &ModelInput) -> Result<Vec<f64>> {
        let mut feature = Vec::with_capacity(Self::feature_dim(self.task, self.vectors.dim()));
        for &role in self.roles() {
            let text = input.segment(role).ok_or_else(|| Error::MalformedInput {
                reason: format!("{} input is missing its {role:?} segment", self.task),
            })?;
            feature.extend(self.vectors.mean_embedding(text));
        }
        Ok(feature)
    }

    fn logits(&self, feature: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(feature).map(|(w, f)| w * f).sum::<f64>() + b)
            .collect()
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn vectors(&self) -> &Arc<WordVectors> {
        &self.vectors
    }

    /// Mean-vector embedder over the same table the victim was trained on,
    /// for callers that want the victim to double as its own encoder.
    pub fn embedder(&self) -> &ReferenceEmbedder {
        &self.embedder
    }

    /// Raw parameters, exposed so tests can recompute the forward pass
    /// independently.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Builds a victim directly from parameters. Intended for hand-built
    /// decision boundaries in tests.
    pub fn from_parameters(
        vectors: Arc<WordVectors>,
        task: TaskKind,
        label_names: Vec<String>,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let feature_dim = Self::feature_dim(task, vectors.dim());
        if weights.len() != label_names.len()
            || bias.len() != label_names.len()
            || weights.iter().any(|row| row.len() != feature_dim)
        {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "parameter shape mismatch: want {}x{feature_dim} weights",
                    label_names.len()
                ),
            });
        }
        if label_names.len() < 2 {
            return Err(Error::InvalidConfig {
                reason: "a victim needs at least two labels".into(),
            });
        }
        Ok(ReferenceVictim {
            embedder: ReferenceEmbedder::new(vectors.clone()),
            vectors,
            task,
            label_names,
            weights,
            bias,
        })
    }

    /// Serializes the model as decimal text with a header binding it to the
    /// word-vector table it was trained against.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("dcp-victim v1\n");
        out.push_str(&format!("task\t{}\n", self.task));
        out.push_str(&format!("dim\t{}\n", self.vectors.dim()));
        out.push_str(&format!("num_labels\t{}\n", self.label_names.len()));
        out.push_str(&format!("label_names\t{}\n", self.label_names.join("\t")));
        out.push_str(&format!("vocab_hash\t{:016x}\n", self.vectors.vocab_hash()));
        for (row, b) in self.weights.iter().zip(&self.bias) {
            out.push_str("row\t");
            out.push_str(&format!("{b:e}"));
            for w in row {
                out.push_str(&format!(" {w:e}"));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Loads a saved model and verifies it matches the given vector table.
    pub fn load(path: &Path, vectors: Arc<WordVectors>) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, reason: String| Error::ModelFormat {
            path: path.to_path_buf(),
            line,
            reason,
        };

        let mut lines = raw.lines().enumerate();
        let (_, magic) = lines
            .next()
            .ok_or_else(|| bad(1, "empty file".into()))?;
        if magic != "dcp-victim v1" {
            return Err(bad(1, format!("unrecognized header {magic:?}")));
        }

        let mut task = None;
        let mut dim = None;
        let mut num_labels = None;
        let mut label_names: Vec<String> = Vec::new();
        let mut vocab_hash = None;
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();

        for (idx, line) in lines {
            let line_no = idx + 1;
            let mut parts = line.split('\t');
            let key = parts.next().unwrap_or_default();
            match key {
                "task" => {
                    task = Some(match parts.next() {
                        Some("classify") => TaskKind::Classify,
                        Some("nli") => TaskKind::Nli,
                        other => return Err(bad(line_no, format!("bad task {other:?}"))),
                    });
                }
                "dim" => {
                    dim = Some(
                        parts
                            .next()
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| bad(line_no, "bad dim".into()))?,
                    );
                }
                "num_labels" => {
                    num_labels = Some(
                        parts
                            .next()
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| bad(line_no, "bad num_labels".into()))?,
                    );
                }
                "label_names" => {
                    label_names = parts.map(str::to_string).collect();
                }
                "vocab_hash" => {
                    vocab_hash = Some(
                        parts
                            .next()
                            .and_then(|s| u64::from_str_radix(s, 16).ok())
                            .ok_or_else(|| bad(line_no, "bad vocab_hash".into()))?,
                    );
                }
                "row" => {
                    let numbers = parts.next().unwrap_or_default();
                    let mut values = numbers.split(' ').map(str::parse::<f64>);
                    let b = values
                        .next()
                        .and_then(std::result::Result::ok)
                        .ok_or_else(|| bad(line_no, "missing bias".into()))?;
                    let weights: Vec<f64> = values
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| bad(line_no, format!("bad weight: {e}")))?;
                    rows.push((b, weights));
                }
                "" => {}
                other => return Err(bad(line_no, format!("unknown key {other:?}"))),
            }
        }

        let task = task.ok_or_else(|| bad(0, "missing task".into()))?;
        let dim = dim.ok_or_else(|| bad(0, "missing dim".into()))?;
        let num_labels = num_labels.ok_or_else(|| bad(0, "missing num_labels".into()))?;
        let expected = vocab_hash.ok_or_else(|| bad(0, "missing vocab_hash".into()))?;

        if dim != vectors.dim() {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: vectors.dim(),
            });
        }
        if expected != vectors.vocab_hash() {
            return Err(Error::VocabHashMismatch {
                expected,
                actual: vectors.vocab_hash(),
            });
        }
        if label_names.len() != num_labels || rows.len() != num_labels {
            return Err(bad(
                0,
                format!(
                    "expected {num_labels} labels, found {} names and {} rows",
                    label_names.len(),
                    rows.len()
                ),
            ));
        }
        let feature_dim = Self::feature_dim(task, dim);
        if rows.iter().any(|(_, w)| w.len() != feature_dim) {
            return Err(bad(0, format!("weight rows must have {feature_dim} columns")));
        }

        let (bias, weights): (Vec<f64>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        ReferenceVictim::from_parameters(vectors, task, label_names, weights, bias)
    }
}

impl VictimModel for ReferenceVictim {
    fn num_labels(&self) -> usize {
        self.label_names.len()
    }

    fn supports_gradients(&self) -> bool {
        true
    }

    fn descriptor(&self) -> String {
        format!(
            "reference-{}-{}l-{}d",
            self.task,
            self.label_names.len(),
            self.vectors.dim()
        )
    }

    fn param_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        for row in &self.weights {
            for w in row {
                h.update(&w.to_bits().to_le_bytes());
            }
        }
        for b in &self.bias {
            h.update(&b.to_bits().to_le_bytes());
        }
        h.finish()
    }

    fn raw_predict_proba(&self, input: &ModelInput) -> Result<Vec<f64>> {
        let feature = self.features(input)?;
        Ok(softmax(&self.logits(&feature)))
    }

    fn raw_token_gradients(
        &self,
        input: &ModelInput,
        target: SegmentRole,
        label: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if label >= self.num_labels() {
            return Err(Error::LabelOutOfRange {
                label,
                num_labels: self.num_labels(),
            });
        }
        let offset = self.block_offset(target)?;
        let text = input.segment(target).ok_or_else(|| Error::MalformedInput {
            reason: format!("input has no {target:?} segment"),
        })?;
        let probs = self.raw_predict_proba(input)?;
        let dim = self.vectors.dim();

        // d loss / d feature_block, then scaled by the 1/k of the mean for
        // each in-vocabulary token. Out-of-vocabulary tokens contribute
        // nothing to the feature, so their gradient is identically zero.
        let mut block_grad = vec![0.0; dim];
        for (c, row) in self.weights.iter().enumerate() {
            let diff = probs[c] - if c == label { 1.0 } else { 0.0 };
            for (g, w) in block_grad.iter_mut().zip(&row[offset..offset + dim]) {
                *g += diff * w;
            }
        }

        let lookups = self.vectors.word_vectors_for(text);
        let in_vocab = lookups.iter().filter(|v| v.is_some()).count();
        let grads = lookups
            .iter()
            .map(|entry| match entry {
                Some(_) => block_grad.iter().map(|g| g / in_vocab as f64).collect(),
                None => vec![0.0; dim],
            })
            .collect();
        Ok(grads)
    }
}

/// Trains the reference victim with full-batch gradient descent. Examples
/// whose segments contain no in-vocabulary words carry a zero feature vector
/// and are skipped (with a log note) rather than learned from.
pub fn train_reference_victim(
    train: &Dataset,
    config: &TrainConfig,
    vectors: Arc<WordVectors>,
) -> Result<ReferenceVictim> {
    if train.is_empty() {
        return Err(Error::EmptyDataset {
            name: train.name.clone(),
        });
    }

    let dim = vectors.dim();
    let feature_dim = ReferenceVictim::feature_dim(train.task_kind, dim);
    let num_labels = train.label_names.len();

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(train.len());
    let mut labels: Vec<usize> = Vec::with_capacity(train.len());
    for example in &train.examples {
        let feature = match train.task_kind {
            TaskKind::Classify => vectors.mean_embedding(example.text.as_deref().unwrap_or("")),
            TaskKind::Nli => {
                let mut f = vectors.mean_embedding(example.premise.as_deref().unwrap_or(""));
                f.extend(vectors.mean_embedding(example.hypothesis.as_deref().unwrap_or("")));
                f
            }
        };
        if feature.iter().all(|&v| v == 0.0) {
            log::warn!(
                "skipping training example {:?}: no in-vocabulary words",
                example.id
            );
            continue;
        }
        features.push(feature);
        labels.push(example.label);
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset {
            name: format!("{} (all examples out of vocabulary)", train.name),
        });
    }

    let mut rng = XorShift64::new(config.seed);
    let mut weights: Vec<Vec<f64>> = (0..num_labels)
        .map(|_| (0..feature_dim).map(|_| rng.gen_f64_range(-0.01, 0.01)).collect())
        .collect();
    let mut bias = vec![0.0; num_labels];

    let n = features.len() as f64;
    for _ in 0..config.epochs {
        let mut grad_w = vec![vec![0.0; feature_dim]; num_labels];
        let mut grad_b = vec![0.0; num_labels];
        for (feature, &label) in features.iter().zip(&labels) {
            let logits: Vec<f64> = weights
                .iter()
                .zip(&bias)
                .map(|(row, b)| row.iter().zip(feature).map(|(w, f)| w * f).sum::<f64>() + b)
                .collect();
            let probs = softmax(&logits);
            for c in 0..num_labels {
                let diff = probs[c] - if c == label { 1.0 } else { 0.0 };
                grad_b[c] += diff;
                for (g, f) in grad_w[c].iter_mut().zip(feature) {
                    *g += diff * f;
                }
            }
        }
        for c in 0..num_labels {
            bias[c] -= config.learning_rate * grad_b[c] / n;
            for (w, g) in weights[c].iter_mut().zip(&grad_w[c]) {
                *w -= config.learning_rate * g / n;
            }
        }
    }

    ReferenceVictim::from_parameters(
        vectors,
        train.task_kind,
        train.label_names.clone(),
        weights,
        bias,
    )
}
