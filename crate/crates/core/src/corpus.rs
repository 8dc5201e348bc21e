//! Dataset loading, validation, and evaluation sampling.
//!
//! Datasets are immutable after load. Labels are positional indices into
//! `label_names`; nothing downstream ever matches label strings.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::rng::XorShift64;

/// What kind of prediction task a dataset poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classify,
    Nli,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::Classify => "classify",
            TaskKind::Nli => "nli",
        })
    }
}

/// Which field of an example an attack is allowed to rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackTarget {
    Text,
    Hypothesis,
    Premise,
}

impl std::fmt::Display for AttackTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackTarget::Text => "text",
            AttackTarget::Hypothesis => "hypothesis",
            AttackTarget::Premise => "premise",
        })
    }
}

/// Role tag for one segment of a victim-model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentRole {
    Text,
    Premise,
    Hypothesis,
}

impl std::fmt::Display for SegmentRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SegmentRole::Text => "text",
            SegmentRole::Premise => "premise",
            SegmentRole::Hypothesis => "hypothesis",
        })
    }
}

impl From<AttackTarget> for SegmentRole {
    fn from(target: AttackTarget) -> Self {
        match target {
            AttackTarget::Text => SegmentRole::Text,
            AttackTarget::Premise => SegmentRole::Premise,
            AttackTarget::Hypothesis => SegmentRole::Hypothesis,
        }
    }
}

/// One attackable unit: a classification text or an NLI pair, plus its gold
/// label and the label vocabulary it indexes into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub task_kind: TaskKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub premise: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    pub label: usize,
    pub label_names: Vec<String>,
}

impl Example {
    pub fn classify(
        id: impl Into<String>,
        text: impl Into<String>,
        label: usize,
        label_names: Vec<String>,
    ) -> Self {
        Example {
            id: id.into(),
            task_kind: TaskKind::Classify,
            text: Some(text.into()),
            premise: None,
            hypothesis: None,
            label,
            label_names,
        }
    }

    pub fn nli(
        id: impl Into<String>,
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
        label: usize,
        label_names: Vec<String>,
    ) -> Self {
        Example {
            id: id.into(),
            task_kind: TaskKind::Nli,
            text: None,
            premise: Some(premise.into()),
            hypothesis: Some(hypothesis.into()),
            label,
            label_names,
        }
    }

    /// Checks the populated-field, label-range, and non-emptiness invariants;
    /// returns a human-readable reason when one fails.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self.task_kind {
            TaskKind::Classify => {
                if self.premise.is_some() || self.hypothesis.is_some() {
                    return Err("classify example carries nli fields".into());
                }
                match &self.text {
                    None => return Err("classify example is missing `text`".into()),
                    Some(t) if t.trim().is_empty() => {
                        return Err("`text` is empty".into());
                    }
                    Some(_) => {}
                }
            }
            TaskKind::Nli => {
                if self.text.is_some() {
                    return Err("nli example carries a `text` field".into());
                }
                match (&self.premise, &self.hypothesis) {
                    (Some(p), Some(h)) => {
                        if p.trim().is_empty() {
                            return Err("`premise` is empty".into());
                        }
                        if h.trim().is_empty() {
                            return Err("`hypothesis` is empty".into());
                        }
                    }
                    _ => return Err("nli example needs both `premise` and `hypothesis`".into()),
                }
            }
        }
        if self.label_names.is_empty() {
            return Err("label_names is empty".into());
        }
        if self.label >= self.label_names.len() {
            return Err(format!(
                "label {} outside range of {} label names",
                self.label,
                self.label_names.len()
            ));
        }
        Ok(())
    }
}

/// An ordered collection of examples sharing one task and label vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub task_kind: TaskKind,
    pub examples: Vec<Example>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Stable fingerprint of the dataset contents (not the file encoding),
    /// used in run manifests.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.update(self.task_kind.to_string().as_bytes());
        for name in &self.label_names {
            h.update(name.as_bytes()).update(b"\x1f");
        }
        for ex in &self.examples {
            h.update(ex.id.as_bytes()).update(b"\x1f");
            for field in [&ex.text, &ex.premise, &ex.hypothesis] {
                if let Some(s) = field {
                    h.update(s.as_bytes());
                }
                h.update(b"\x1f");
            }
            h.update(&ex.label.to_le_bytes());
        }
        h.finish()
    }
}

/// On-disk encodings accepted by [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

#[derive(Deserialize)]
struct ClassifyRow {
    id: String,
    text: String,
    label: usize,
}

#[derive(Deserialize)]
struct NliRow {
    id: String,
    premise: String,
    hypothesis: String,
    label: usize,
}

/// Label names come from a sidecar file: `<stem>.labels.txt` next to the
/// data file, or a shared `labels.txt` in the same directory.
fn load_label_names(data_path: &Path) -> Result<Vec<String>> {
    let mut candidates = Vec::new();
    if let Some(stem) = data_path.file_stem() {
        let mut name = stem.to_os_string();
        name.push(".labels.txt");
        candidates.push(data_path.with_file_name(name));
    }
    candidates.push(data_path.with_file_name("labels.txt"));

    for candidate in &candidates {
        if candidate.exists() {
            let raw = fs::read_to_string(candidate).map_err(|e| Error::io(candidate, e))?;
            let names: Vec<String> = raw
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            if names.is_empty() {
                return Err(Error::InvalidConfig {
                    reason: format!("label file {} is empty", candidate.display()),
                });
            }
            return Ok(names);
        }
    }
    Err(Error::InvalidConfig {
        reason: format!(
            "no label sidecar found for {} (expected {})",
            data_path.display(),
            candidates[0].display()
        ),
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads and validates a dataset. Row order is preserved; every row must
/// satisfy the [`Example`] invariants and ids must be unique.
pub fn load_dataset(path: &Path, format: DataFormat, task_kind: TaskKind) -> Result<Dataset> {
    let label_names = load_label_names(path)?;
    let name = dataset_name(path);

    let mut examples = Vec::new();
    match (format, task_kind) {
        (DataFormat::Csv, TaskKind::Classify) => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::MalformedRow {
                    path: path.to_path_buf(),
                    row: 0,
                    reason: format!("{other:?}"),
                },
            })?;
            for (idx, record) in reader.deserialize::<ClassifyRow>().enumerate() {
                let row = idx + 1;
                let parsed = record.map_err(|e| Error::MalformedRow {
                    path: path.to_path_buf(),
                    row,
                    reason: e.to_string(),
                })?;
                examples.push(Example::classify(
                    parsed.id,
                    parsed.text,
                    parsed.label,
                    label_names.clone(),
                ));
            }
        }
        (DataFormat::Csv, TaskKind::Nli) => {
            return Err(Error::InvalidConfig {
                reason: "csv datasets support the classify task only; use jsonl for nli".into(),
            });
        }
        (DataFormat::Jsonl, _) => {
            let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in raw.lines().enumerate() {
                let row = idx + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let malformed = |reason: String| Error::MalformedRow {
                    path: path.to_path_buf(),
                    row,
                    reason,
                };
                let example = match task_kind {
                    TaskKind::Classify => {
                        let parsed: ClassifyRow =
                            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
                        Example::classify(parsed.id, parsed.text, parsed.label, label_names.clone())
                    }
                    TaskKind::Nli => {
                        let parsed: NliRow =
                            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
                        Example::nli(
                            parsed.id,
                            parsed.premise,
                            parsed.hypothesis,
                            parsed.label,
                            label_names.clone(),
                        )
                    }
                };
                examples.push(example);
            }
        }
    }

    if examples.is_empty() {
        return Err(Error::EmptyDataset { name });
    }

    let mut seen_ids = HashSet::new();
    for (idx, example) in examples.iter().enumerate() {
        let row = idx + 1;
        example.validate().map_err(|reason| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason,
        })?;
        if !seen_ids.insert(example.id.clone()) {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                reason: format!("duplicate id {:?}", example.id),
            });
        }
    }

    Ok(Dataset {
        name,
        task_kind,
        examples,
        label_names,
    })
}

/// Writes a dataset back out as JSONL plus its `<stem>.labels.txt` sidecar.
pub fn save_jsonl(dataset: &Dataset, path: &Path) -> Result<PathBuf> {
    let mut out = String::new();
    for ex in &dataset.examples {
        let row = match dataset.task_kind {
            TaskKind::Classify => serde_json::json!({
                "id": ex.id,
                "text": ex.text,
                "label": ex.label,
            }),
            TaskKind::Nli => serde_json::json!({
                "id": ex.id,
                "premise": ex.premise,
                "hypothesis": ex.hypothesis,
                "label": ex.label,
            }),
        };
        out.push_str(&row.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    let stem = path.file_stem().unwrap_or_default().to_os_string();
    let mut sidecar_name = stem;
    sidecar_name.push(".labels.txt");
    let sidecar = path.with_file_name(sidecar_name);
    fs::write(&sidecar, dataset.label_names.join("\n") + "\n")
        .map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

/// Draws `n` distinct examples without replacement, deterministically for a
/// fixed (dataset, n, seed). Uses a partial Fisher-Yates shuffle over the
/// index range so the draw order itself is seed-stable.
pub fn sample_eval_set(dataset: &Dataset, n: usize, seed: u64) -> Result<Vec<Example>> {
    if n < 1 || n > dataset.len() {
        return Err(Error::SampleSize {
            requested: n,
            available: dataset.len(),
        });
    }
    let mut rng = XorShift64::new(seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut picked = Vec::with_capacity(n);
    for i in 0..n {
        let j = i + rng.gen_range((indices.len() - i) as u64) as usize;
        indices.swap(i, j);
        picked.push(dataset.examples[indices[i]].clone());
    }
    Ok(picked)
}

/// Splits an example into the field under attack and the untouched context
/// segments the victim still needs to see.
pub fn select_attack_field(
    example: &Example,
    target: AttackTarget,
) -> Result<(String, Vec<(SegmentRole, String)>)> {
    let incompatible = || Error::IncompatibleTarget {
        target: target.to_string(),
        task: example.task_kind.to_string(),
    };
    match (example.task_kind, target) {
        (TaskKind::Classify, AttackTarget::Text) => {
            let text = example.text.clone().ok_or_else(incompatible)?;
            Ok((text, Vec::new()))
        }
        (TaskKind::Nli, AttackTarget::Hypothesis) => {
            let hypothesis = example.hypothesis.clone().ok_or_else(incompatible)?;
            let premise = example.premise.clone().ok_or_else(incompatible)?;
            Ok((hypothesis, vec![(SegmentRole::Premise, premise)]))
        }
        (TaskKind::Nli, AttackTarget::Premise) => {
            let premise = example.premise.clone().ok_or_else(incompatible)?;
            let hypothesis = example.hypothesis.clone().ok_or_else(incompatible)?;
            Ok((premise, vec![(SegmentRole::Hypothesis, hypothesis)]))
        }
        _ => Err(incompatible()),
    }
}
