//! Benchmark orchestration: attack grids over datasets and victims, result
//! persistence, and summary tables.
//!
//! A grid is the cross product datasets × victims × attacks. Every cell of
//! one grid shares the same sampled examples, candidate sources, and
//! position filters, so attack columns are directly comparable; the
//! fairness of a finished grid is re-checked from its manifests rather
//! than trusted. Output lands under `<out>/<run-id>/` as a JSONL result
//! log, a CSV summary, a markdown summary, and `manifest.json`. The run id
//! is a fingerprint of the manifests, so rerunning the same plan writes to
//! the same directory with byte-identical contents.
//!
//! The JSONL log is the source of truth: stored metrics are recomputable
//! from the per-example lines, and [`read_results_jsonl`] verifies that on
//! every load.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{
    run_dcp_attack, run_pwws_attack, AttackConfig, AttackContext, AttackMethod, AttackResult,
};
use crate::candidates::CandidateGenerator;
use crate::corpus::{self, AttackTarget, Dataset, Example, TaskKind};
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::metrics::{self, RunMetrics};
use crate::textproc::Tokenizer;
use crate::victim::{TextEmbedder, VictimModel};

/// Tolerance for comparing stored metrics against re-aggregation.
const METRICS_TOL: f64 = 1e-9;

/// Marker rendered in markdown cells whose metric has no defined value,
/// e.g. success-conditioned means of a cell with zero successes.
const ABSENT: &str = "n/a";

// ---------------------------------------------------------------------------
// Manifests and reports
// ---------------------------------------------------------------------------

/// Everything needed to rerun one (dataset, victim, attack) cell and get
/// bit-identical results with the same build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: String,
    /// Content fingerprint of the dataset (hex), independent of file encoding.
    pub dataset_hash: String,
    pub victim: String,
    /// Parameter fingerprint of the victim (hex).
    pub victim_param_hash: String,
    pub attack: AttackMethod,
    /// Which field of each example the attack rewrites.
    pub target: AttackTarget,
    pub attack_config: AttackConfig,
    pub seed: u64,
    pub sample_size: usize,
    pub tool_version: String,
}

impl RunManifest {
    fn new(
        dataset: &Dataset,
        victim: &dyn VictimModel,
        attack: AttackMethod,
        target: AttackTarget,
        config: &BenchmarkConfig,
    ) -> Self {
        RunManifest {
            dataset: dataset.name.clone(),
            dataset_hash: format!("{:016x}", dataset.content_hash()),
            victim: victim.descriptor(),
            victim_param_hash: format!("{:016x}", victim.param_hash()),
            attack,
            target,
            attack_config: config.attack.clone(),
            seed: config.seed,
            sample_size: config.sample_size,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Human-readable cell key used to tag persisted lines.
    pub fn cell_id(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.dataset, self.victim, self.attack, self.target
        )
    }

    /// Sort key giving reports a stable order in every output file.
    fn sort_key(&self) -> (String, String, String, String) {
        (
            self.dataset.clone(),
            self.victim.clone(),
            self.attack.to_string(),
            self.target.to_string(),
        )
    }
}

/// One finished grid cell: its manifest, per-example results in example-id
/// order, and the metrics aggregated from them. `wall_time` is measured,
/// not persisted; rendered tables report it informally at best.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub manifest: RunManifest,
    pub results: Vec<AttackResult>,
    pub metrics: RunMetrics,
    pub wall_time: Duration,
}

/// A cell that aborted. The grid keeps going; the failure is carried here
/// so callers can report it instead of losing the whole run.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub manifest: RunManifest,
    pub error: String,
}

/// Outcome of a whole grid: completed cells plus any aborted ones.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub reports: Vec<BenchmarkReport>,
    pub failures: Vec<CellFailure>,
}

// ---------------------------------------------------------------------------
// Grid execution
// ---------------------------------------------------------------------------

/// Text-processing components shared by every cell of a grid. Sharing is
/// what makes attack columns comparable: same tokenizer, same candidate
/// sources, same similarity encoder.
#[derive(Clone, Copy)]
pub struct GridComponents<'a> {
    pub embedder: &'a dyn TextEmbedder,
    pub tokenizer: &'a Tokenizer,
    pub candidates: &'a CandidateGenerator,
}

/// Run-level knobs: one attack configuration for every cell, one seed and
/// sample size for every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub sample_size: usize,
    pub seed: u64,
    /// Field to rewrite on NLI datasets; classification always attacks the
    /// text field.
    pub nli_target: AttackTarget,
    pub attack: AttackConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            sample_size: 50,
            seed: 7,
            nli_target: AttackTarget::Hypothesis,
            attack: AttackConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(Error::InvalidConfig {
                reason: "sample_size must be at least 1".into(),
            });
        }
        if self.nli_target == AttackTarget::Text {
            return Err(Error::InvalidConfig {
                reason: "nli_target must be premise or hypothesis".into(),
            });
        }
        self.attack.validate()
    }
}

/// Runs every (dataset, victim, attack) cell of the grid.
///
/// Each dataset is sampled once, so every victim and attack sees the same
/// examples. A victim failure aborts only its own cell; the error is
/// recorded on the returned run. Per-example attacks run concurrently
/// unless the candidate generator forbids it, and results are merged in
/// example-id order either way, so persisted bytes are independent of
/// scheduling.
pub fn run_benchmark(
    datasets: &[&Dataset],
    victims: &[&dyn VictimModel],
    attacks: &[AttackMethod],
    shared: &GridComponents<'_>,
    config: &BenchmarkConfig,
) -> Result<BenchmarkRun> {
    config.validate()?;
    if datasets.is_empty() || victims.is_empty() || attacks.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "a benchmark grid needs at least one dataset, one victim, and one attack"
                .into(),
        });
    }

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for &dataset in datasets {
        let target = match dataset.task_kind {
            TaskKind::Classify => AttackTarget::Text,
            TaskKind::Nli => config.nli_target,
        };
        let sample = corpus::sample_eval_set(dataset, config.sample_size, config.seed)?;
        for &victim in victims {
            for &attack in attacks {
                let manifest = RunManifest::new(dataset, victim, attack, target, config);
                let started = Instant::now();
                let cell = run_cell(victim, shared, &sample, attack, target, &config.attack)
                    .and_then(|results| {
                        let metrics = metrics::aggregate(&results, results.len())?;
                        Ok((results, metrics))
                    });
                match cell {
                    Ok((results, metrics)) => reports.push(BenchmarkReport {
                        manifest,
                        results,
                        metrics,
                        wall_time: started.elapsed(),
                    }),
                    Err(e) => failures.push(CellFailure {
                        manifest,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    verify_fairness(&reports)?;
    Ok(BenchmarkRun { reports, failures })
}

/// Attacks every sampled example with one method against one victim.
/// Any error aborts the whole cell: a partial cell would silently skew
/// its denominators.
fn run_cell(
    victim: &dyn VictimModel,
    shared: &GridComponents<'_>,
    sample: &[Example],
    attack: AttackMethod,
    target: AttackTarget,
    config: &AttackConfig,
) -> Result<Vec<AttackResult>> {
    let ctx = AttackContext {
        model: victim,
        embedder: shared.embedder,
        tokenizer: shared.tokenizer,
        candidates: shared.candidates,
    };
    let run_one = |ex: &Example| match attack {
        AttackMethod::Dcp => run_dcp_attack(&ctx, ex, target, config),
        AttackMethod::Pwws => run_pwws_attack(&ctx, ex, target, config),
    };
    let mut results: Vec<AttackResult> = if shared.candidates.concurrent_safe() {
        sample.par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        sample.iter().map(run_one).collect::<Result<_>>()?
    };
    results.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    Ok(results)
}

/// Re-checks grid fairness from the finished manifests: within one
/// dataset, every cell must have sampled the same examples and used the
/// same candidate sources and position filters.
pub fn verify_fairness(reports: &[BenchmarkReport]) -> Result<()> {
    let unfair = |reason: String| Error::InvalidConfig {
        reason: format!("unfair grid: {reason}"),
    };
    let mut by_dataset: HashMap<&str, &BenchmarkReport> = HashMap::new();
    for report in reports {
        let m = &report.manifest;
        let Some(first) = by_dataset.get(m.dataset.as_str()) else {
            by_dataset.insert(&m.dataset, report);
            continue;
        };
        let f = &first.manifest;
        if m.dataset_hash != f.dataset_hash
            || m.seed != f.seed
            || m.sample_size != f.sample_size
            || m.target != f.target
        {
            return Err(unfair(format!(
                "cells {} and {} disagree on sampling",
                f.cell_id(),
                m.cell_id()
            )));
        }
        let (a, b) = (&m.attack_config, &f.attack_config);
        if a.sources != b.sources
            || a.per_source_cap != b.per_source_cap
            || a.total_cap != b.total_cap
            || a.exclude_stopwords != b.exclude_stopwords
        {
            return Err(unfair(format!(
                "cells {} and {} disagree on candidate sources or filters",
                f.cell_id(),
                m.cell_id()
            )));
        }
        let ids = |r: &BenchmarkReport| -> Vec<String> {
            r.results.iter().map(|x| x.example_id.clone()).collect()
        };
        if ids(report) != ids(first) {
            return Err(unfair(format!(
                "cells {} and {} attacked different example sets",
                f.cell_id(),
                m.cell_id()
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Which summary encodings [`emit_report`] writes. The JSONL result log
/// carries full per-example records; CSV and markdown are flat summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Jsonl,
    Csv,
    Markdown,
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportFormat::Jsonl => "jsonl",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
        })
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown report format {other:?}; want jsonl, csv, or markdown"),
            }),
        }
    }
}

/// Files written for one emitted run.
#[derive(Debug, Clone)]
pub struct EmittedReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// One line of the JSONL result log. Result lines for a cell precede its
/// summary line; the summary carries everything needed to re-derive and
/// verify the stored metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum JsonlLine {
    Result {
        cell: String,
        result: AttackResult,
    },
    Summary {
        cell: String,
        manifest: RunManifest,
        metrics: RunMetrics,
        total: usize,
    },
}

/// Fingerprint of a set of reports, used as the output directory name.
/// Depends only on the manifests (not on result contents or wall time), so
/// a re-run of the same plan lands in the same place.
pub fn run_id(reports: &[BenchmarkReport]) -> String {
    let mut sorted: Vec<&RunManifest> = reports.iter().map(|r| &r.manifest).collect();
    sorted.sort_by_key(|m| m.sort_key());
    let mut h = Fnv1a::new();
    for manifest in sorted {
        // Serialization of a plain struct is infallible.
        h.update(serde_json::to_string(manifest).unwrap().as_bytes());
        h.update(b"\x1e");
    }
    format!("{:016x}", h.finish())
}

/// Writes `manifest.json` plus the selected summary encodings under
/// `<out_root>/<run-id>/`. Reports are emitted in (dataset, victim,
/// attack, target) order regardless of input order. Reference rows, when
/// given, are appended to the markdown summary as a clearly separated
/// "reported, not reproduced" section.
pub fn emit_report(
    reports: &[BenchmarkReport],
    out_root: &Path,
    formats: &[ReportFormat],
    reference: Option<&[ReferenceRow]>,
) -> Result<EmittedReport> {
    if reports.is_empty() {
        return Err(Error::NoReports);
    }
    let mut sorted: Vec<&BenchmarkReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.manifest.sort_key());

    let dir = out_root.join(run_id(reports));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();

    let manifest_path = dir.join("manifest.json");
    let manifests: Vec<&RunManifest> = sorted.iter().map(|r| &r.manifest).collect();
    let body = serde_json::json!({
        "run_id": run_id(reports),
        "cells": manifests,
    });
    // Pretty-printing a Value cannot fail.
    let mut text = serde_json::to_string_pretty(&body).unwrap();
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    files.push(manifest_path);

    for format in formats {
        let (name, body) = match format {
            ReportFormat::Jsonl => ("results.jsonl", results_jsonl(&sorted)),
            ReportFormat::Csv => ("summary.csv", summary_csv(&sorted)),
            ReportFormat::Markdown => ("summary.md", summary_markdown(&sorted, reference)),
        };
        let path = dir.join(name);
        if files.contains(&path) {
            continue;
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(EmittedReport { dir, files })
}

fn results_jsonl(sorted: &[&BenchmarkReport]) -> String {
    let mut out = String::new();
    for report in sorted {
        let cell = report.manifest.cell_id();
        for result in &report.results {
            let line = JsonlLine::Result {
                cell: cell.clone(),
                result: result.clone(),
            };
            out.push_str(&serde_json::to_string(&line).unwrap());
            out.push('\n');
        }
        let line = JsonlLine::Summary {
            cell,
            manifest: report.manifest.clone(),
            metrics: report.metrics.clone(),
            total: report.results.len(),
        };
        out.push_str(&serde_json::to_string(&line).unwrap());
        out.push('\n');
    }
    out
}

/// One verified cell parsed back from a JSONL result log.
#[derive(Debug, Clone)]
pub struct LoadedCell {
    pub manifest: RunManifest,
    pub results: Vec<AttackResult>,
    pub metrics: RunMetrics,
}

/// Parses a JSONL result log and re-verifies every cell: the stored
/// metrics must match re-aggregation of the stored results within 1e-9.
pub fn read_results_jsonl(path: &Path) -> Result<Vec<LoadedCell>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |row: usize, reason: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason,
    };

    let mut pending: HashMap<String, Vec<AttackResult>> = HashMap::new();
    let mut cells = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonlLine =
            serde_json::from_str(line).map_err(|e| malformed(row, e.to_string()))?;
        match parsed {
            JsonlLine::Result { cell, result } => {
                pending.entry(cell).or_default().push(result);
            }
            JsonlLine::Summary {
                cell,
                manifest,
                metrics: stored,
                total,
            } => {
                let results = pending.remove(&cell).unwrap_or_default();
                if results.len() != total {
                    return Err(malformed(
                        row,
                        format!(
                            "summary for cell {cell:?} expects {total} results, found {}",
                            results.len()
                        ),
                    ));
                }
                let recomputed = metrics::aggregate(&results, total)?;
                if !stored.approx_eq(&recomputed, METRICS_TOL) {
                    return Err(Error::MetricsMismatch { cell });
                }
                cells.push(LoadedCell {
                    manifest,
                    results,
                    metrics: stored,
                });
            }
        }
    }
    if let Some(cell) = pending.keys().next() {
        return Err(malformed(
            raw.lines().count(),
            format!("results for cell {cell:?} have no summary record"),
        ));
    }
    if cells.is_empty() {
        return Err(Error::NoReports);
    }
    Ok(cells)
}

fn fmt_opt(value: Option<f64>, precision: usize) -> String {
    value.map_or_else(String::new, |v| format!("{v:.precision$}"))
}

fn summary_csv(sorted: &[&BenchmarkReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Static headers and in-memory writes cannot fail.
    w.write_record([
        "dataset",
        "victim",
        "attack",
        "target",
        "sample_size",
        "seed",
        "clean_accuracy",
        "accuracy_under_attack",
        "attack_success_rate",
        "mean_perturbation_rate",
        "mean_similarity",
        "mean_queries",
        "mean_gradient_queries",
        "mean_readability_delta",
    ])
    .unwrap();
    for report in sorted {
        let m = &report.manifest;
        let x = &report.metrics;
        w.write_record([
            m.dataset.clone(),
            m.victim.clone(),
            m.attack.to_string(),
            m.target.to_string(),
            m.sample_size.to_string(),
            m.seed.to_string(),
            format!("{:.4}", x.clean_accuracy),
            format!("{:.4}", x.accuracy_under_attack),
            format!("{:.4}", x.attack_success_rate),
            fmt_opt(x.mean_perturbation_rate, 4),
            fmt_opt(x.mean_similarity, 6),
            format!("{:.4}", x.mean_queries),
            format!("{:.4}", x.mean_gradient_queries),
            fmt_opt(x.mean_readability_delta, 4),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn md_opt(value: Option<f64>, precision: usize) -> String {
    value.map_or_else(|| ABSENT.to_string(), |v| format!("{v:.precision$}"))
}

fn summary_markdown(sorted: &[&BenchmarkReport], reference: Option<&[ReferenceRow]>) -> String {
    let mut out = String::new();
    out.push_str("# Attack benchmark summary\n\n");
    out.push_str(&format!(
        "Run `{}`: {} cell(s), sample size {}, seed {}.\n\n",
        run_id_of_sorted(sorted),
        sorted.len(),
        sorted.first().map_or(0, |r| r.manifest.sample_size),
        sorted.first().map_or(0, |r| r.manifest.seed),
    ));
    out.push_str(
        "| Dataset | Victim | Attack | Target | Clean Acc (%) | Acc Under Attack (%) \
         | ASR (%) | Perturb Rate (%) | Similarity | Mean Queries | FK Delta |\n",
    );
    out.push_str(
        "|---|---|---|---|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for report in sorted {
        let m = &report.manifest;
        let x = &report.metrics;
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.2} | {:.2} | {:.2} | {} | {} | {:.1} | {} |\n",
            m.dataset,
            m.victim,
            m.attack,
            m.target,
            x.clean_accuracy,
            x.accuracy_under_attack,
            x.attack_success_rate,
            md_opt(x.mean_perturbation_rate, 2),
            md_opt(x.mean_similarity, 4),
            x.mean_queries,
            md_opt(x.mean_readability_delta, 2),
        ));
    }
    if let Some(rows) = reference {
        out.push('\n');
        out.push_str(&reference_markdown(rows));
    }
    out
}

fn run_id_of_sorted(sorted: &[&BenchmarkReport]) -> String {
    let mut h = Fnv1a::new();
    for report in sorted {
        h.update(serde_json::to_string(&report.manifest).unwrap().as_bytes());
        h.update(b"\x1e");
    }
    format!("{:016x}", h.finish())
}

// ---------------------------------------------------------------------------
// Reference numbers
// ---------------------------------------------------------------------------

/// One row of the bundled reference-numbers table: results of the original
/// large-model evaluation, shipped for context. This harness does not
/// reproduce them, and every rendering labels them accordingly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub source_table: String,
    pub dataset: String,
    pub model: String,
    pub attack: String,
    pub original_accuracy: Option<f64>,
    pub accuracy_under_attack: Option<f64>,
    pub perturbation_rate: Option<f64>,
    pub queries: Option<f64>,
    pub semantic_similarity: Option<f64>,
}

/// Loads `reference_numbers.csv`. Empty fields become `None`; a row need
/// only populate the columns its source table reported.
pub fn load_reference_numbers(path: &Path) -> Result<Vec<ReferenceRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            row: 0,
            reason: format!("{other:?}"),
        },
    })?;
    let mut rows = Vec::new();
    for (idx, record) in reader.deserialize::<ReferenceRow>().enumerate() {
        rows.push(record.map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row: idx + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(rows)
}

/// Renders the reference rows as their own markdown section.
pub fn reference_markdown(rows: &[ReferenceRow]) -> String {
    let mut out = String::new();
    out.push_str("## Reference results (reported, not reproduced)\n\n");
    out.push_str(
        "Numbers transcribed from the original large-model evaluation, shown \
         for context only; this harness does not reproduce them.\n\n",
    );
    out.push_str(
        "| Source | Dataset | Model | Attack | Clean Acc (%) | Acc Under Attack (%) \
         | Perturb Rate (%) | Queries | Similarity |\n",
    );
    out.push_str("|---|---|---|---|---:|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.source_table,
            r.dataset,
            r.model,
            r.attack,
            md_opt(r.original_accuracy, 2),
            md_opt(r.accuracy_under_attack, 2),
            md_opt(r.perturbation_rate, 2),
            md_opt(r.queries, 0),
            md_opt(r.semantic_similarity, 2),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Declarative run settings
// ---------------------------------------------------------------------------

/// The `[run]` section: seed, sampling, and output destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub seed: u64,
    pub sample_size: usize,
    pub out: PathBuf,
    pub formats: Vec<ReportFormat>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 7,
            sample_size: 50,
            out: PathBuf::from("results"),
            formats: vec![
                ReportFormat::Jsonl,
                ReportFormat::Csv,
                ReportFormat::Markdown,
            ],
        }
    }
}

/// The `[grid]` section: which datasets and attacks to cross. Dataset
/// names resolve to `<name>_train.jsonl` / `<name>_test.jsonl` in the data
/// directory; the victim for each dataset is trained on its train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSettings {
    pub datasets: Vec<String>,
    pub attacks: Vec<AttackMethod>,
    pub nli_target: AttackTarget,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            datasets: vec!["toy_sentiment".into()],
            attacks: vec![AttackMethod::Dcp, AttackMethod::Pwws],
            nli_target: AttackTarget::Hypothesis,
        }
    }
}

/// A whole benchmark plan as one declarative file (TOML sections `[run]`,
/// `[grid]`, `[victim]`, `[attack]`). Every field has a default, so an
/// empty file is a valid plan; command-line flags may override any of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BenchSettings {
    pub run: RunSettings,
    pub grid: GridSettings,
    pub victim: crate::victim::TrainConfig,
    pub attack: AttackConfig,
}

impl BenchSettings {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig {
            reason: format!("bad settings file: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw)
    }

    /// The per-run knobs this plan implies.
    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            sample_size: self.run.sample_size,
            seed: self.run.seed,
            nli_target: self.grid.nli_target,
            attack: self.attack.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Data-directory resolution
// ---------------------------------------------------------------------------

/// Environment variable overriding the bundled data directory.
pub const DATA_DIR_ENV: &str = "DCP_DATA_DIR";

/// Picks the data directory: an explicit path wins, then `DCP_DATA_DIR`,
/// then `./data`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(path) = explicit {
        return path.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("data")
}

/// A named dataset pair: the train split for fitting a victim and the test
/// split for attacking it.
#[derive(Debug, Clone)]
pub struct GridDataset {
    pub name: String,
    pub train: Dataset,
    pub eval: Dataset,
}

/// Infers the task from the first record of a JSONL file: rows carrying a
/// `premise` field are NLI, everything else is classification.
pub fn sniff_task_kind(path: &Path) -> Result<TaskKind> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::MalformedRow {
                path: path.to_path_buf(),
                row: idx + 1,
                reason: e.to_string(),
            })?;
        return Ok(if value.get("premise").is_some() {
            TaskKind::Nli
        } else {
            TaskKind::Classify
        });
    }
    Err(Error::EmptyDataset {
        name: path.display().to_string(),
    })
}

/// Loads `<name>_train.jsonl` and `<name>_test.jsonl` from the data
/// directory, inferring the task from the file contents.
pub fn load_grid_dataset(data_dir: &Path, name: &str) -> Result<GridDataset> {
    let train_path = data_dir.join(format!("{name}_train.jsonl"));
    let eval_path = data_dir.join(format!("{name}_test.jsonl"));
    let task = sniff_task_kind(&eval_path)?;
    Ok(GridDataset {
        name: name.to_string(),
        train: corpus::load_dataset(&train_path, corpus::DataFormat::Jsonl, task)?,
        eval: corpus::load_dataset(&eval_path, corpus::DataFormat::Jsonl, task)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::testutil::{
        planted_embedder, planted_generator, planted_victim, TableVictim,
    };
    use crate::victim::ModelInput;

    fn planted_dataset() -> Dataset {
        let labels = vec!["negative".to_string(), "positive".to_string()];
        let ex = |id: &str, text: &str, label: usize| {
            Example::classify(id, text, label, labels.clone())
        };
        Dataset {
            name: "planted".into(),
            task_kind: TaskKind::Classify,
            label_names: labels.clone(),
            examples: vec![
                ex("ex-01", "good film", 1),
                ex("ex-02", "good acting", 1),
                ex("ex-03", "bad film", 0),
                ex("ex-04", "weak film", 0),
                // Mean sentiment is negative, so the victim misreads this
                // "positive" example cleanly and the attack skips it.
                ex("ex-05", "dull plot", 1),
                ex("ex-06", "great story", 1),
            ],
        }
    }

    /// Relaxed gates so the two-dimensional planted embedding, whose
    /// synonym swaps move cosines a lot, still admits substitutions.
    fn relaxed_config() -> BenchmarkConfig {
        BenchmarkConfig {
            sample_size: 6,
            seed: 11,
            nli_target: AttackTarget::Hypothesis,
            attack: AttackConfig {
                lambda: 0.1,
                sim_threshold: 0.0,
                max_substitution_fraction: 1.0,
                ..AttackConfig::default()
            },
        }
    }

    fn planted_run() -> BenchmarkRun {
        let dataset = planted_dataset();
        let victim = planted_victim(2.0);
        let embedder = planted_embedder();
        let tokenizer = Tokenizer::default();
        let generator = planted_generator();
        let shared = GridComponents {
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        run_benchmark(
            &[&dataset],
            &[&victim],
            &[AttackMethod::Dcp, AttackMethod::Pwws],
            &shared,
            &relaxed_config(),
        )
        .unwrap()
    }

    #[test]
    fn grid_yields_one_report_per_cell_over_shared_samples() {
        let run = planted_run();
        assert!(run.failures.is_empty());
        assert_eq!(run.reports.len(), 2);

        let ids: Vec<Vec<&str>> = run
            .reports
            .iter()
            .map(|r| r.results.iter().map(|x| x.example_id.as_str()).collect())
            .collect();
        assert_eq!(ids[0], ids[1]);
        assert_eq!(ids[0].len(), 6);
        let mut sorted = ids[0].clone();
        sorted.sort_unstable();
        assert_eq!(ids[0], sorted);

        for report in &run.reports {
            let recomputed =
                metrics::aggregate(&report.results, report.results.len()).unwrap();
            assert!(report.metrics.approx_eq(&recomputed, 1e-12));
            assert_eq!(report.manifest.sample_size, 6);
            assert_eq!(report.manifest.dataset, "planted");
            // The clean-misread example skips under both attacks.
            assert!(report.results.iter().any(|r| r.skipped));
        }
        let attacks: Vec<AttackMethod> =
            run.reports.iter().map(|r| r.manifest.attack).collect();
        assert_eq!(attacks, vec![AttackMethod::Dcp, AttackMethod::Pwws]);
    }

    #[test]
    fn rerunning_the_same_plan_is_byte_identical() {
        let first = planted_run();
        let second = planted_run();
        fn sorted(run: &BenchmarkRun) -> Vec<&BenchmarkReport> {
            run.reports.iter().collect()
        }
        assert_eq!(
            results_jsonl(&sorted(&first)),
            results_jsonl(&sorted(&second))
        );
        assert_eq!(run_id(&first.reports), run_id(&second.reports));
    }

    #[test]
    fn run_id_ignores_report_order() {
        let run = planted_run();
        let reversed: Vec<BenchmarkReport> = run.reports.iter().rev().cloned().collect();
        assert_eq!(run_id(&run.reports), run_id(&reversed));
    }

    #[test]
    fn emitted_files_round_trip_and_verify() {
        let run = planted_run();
        let dir = tempfile::tempdir().unwrap();
        let emitted = emit_report(
            &run.reports,
            dir.path(),
            &[
                ReportFormat::Jsonl,
                ReportFormat::Csv,
                ReportFormat::Markdown,
            ],
            None,
        )
        .unwrap();

        for name in ["manifest.json", "results.jsonl", "summary.csv", "summary.md"] {
            assert!(emitted.dir.join(name).exists(), "missing {name}");
        }
        assert_eq!(emitted.files.len(), 4);

        let cells = read_results_jsonl(&emitted.dir.join("results.jsonl")).unwrap();
        assert_eq!(cells.len(), 2);
        for (cell, report) in cells.iter().zip(&run.reports) {
            assert_eq!(cell.manifest, report.manifest);
            assert_eq!(cell.results, report.results);
            assert!(cell.metrics.approx_eq(&report.metrics, 1e-12));
        }

        let md = fs::read_to_string(emitted.dir.join("summary.md")).unwrap();
        assert!(md.contains("| Dataset |"));
        assert!(md.contains("| planted |"));

        let csv_text = fs::read_to_string(emitted.dir.join("summary.csv")).unwrap();
        assert!(csv_text.starts_with("dataset,victim,attack,target"));
        assert_eq!(csv_text.lines().count(), 3);
    }

    #[test]
    fn tampered_metrics_fail_verification_on_load() {
        let run = planted_run();
        let dir = tempfile::tempdir().unwrap();
        let emitted =
            emit_report(&run.reports, dir.path(), &[ReportFormat::Jsonl], None).unwrap();
        let path = emitted.dir.join("results.jsonl");
        let tampered = fs::read_to_string(&path)
            .unwrap()
            .replace("\"clean_accuracy\":", "\"clean_accuracy\":9");
        fs::write(&path, tampered).unwrap();
        assert!(matches!(
            read_results_jsonl(&path),
            Err(Error::MetricsMismatch { .. })
        ));
    }

    #[test]
    fn successless_cells_render_absent_markers() {
        // Candidates for "bad" only push the mean sentiment further
        // negative, so no substitution can flip this example.
        let labels = vec!["negative".to_string(), "positive".to_string()];
        let dataset = Dataset {
            name: "hopeless".into(),
            task_kind: TaskKind::Classify,
            label_names: labels.clone(),
            examples: vec![Example::classify("only", "bad film", 0, labels)],
        };
        let victim = planted_victim(2.0);
        let embedder = planted_embedder();
        let tokenizer = Tokenizer::default();
        let generator = planted_generator();
        let shared = GridComponents {
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let config = BenchmarkConfig {
            sample_size: 1,
            ..relaxed_config()
        };
        let run = run_benchmark(
            &[&dataset],
            &[&victim],
            &[AttackMethod::Dcp],
            &shared,
            &config,
        )
        .unwrap();
        let report = &run.reports[0];
        assert_eq!(report.metrics.attack_success_rate, 0.0);
        assert!(report.metrics.mean_perturbation_rate.is_none());

        let md = summary_markdown(&[report], None);
        assert!(md.contains(ABSENT));
        let csv_text = summary_csv(&[report]);
        let data_line = csv_text.lines().nth(1).unwrap();
        assert!(data_line.contains(",,"));
    }

    #[test]
    fn failing_victim_aborts_only_its_cell() {
        struct FailingVictim;
        impl VictimModel for FailingVictim {
            fn num_labels(&self) -> usize {
                2
            }
            fn descriptor(&self) -> String {
                "failing".into()
            }
            fn param_hash(&self) -> u64 {
                1
            }
            fn raw_predict_proba(&self, _input: &ModelInput) -> Result<Vec<f64>> {
                Err(Error::MalformedInput {
                    reason: "scripted failure".into(),
                })
            }
        }

        let dataset = planted_dataset();
        let good = planted_victim(2.0);
        let bad = FailingVictim;
        let embedder = planted_embedder();
        let tokenizer = Tokenizer::default();
        let generator = planted_generator();
        let shared = GridComponents {
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let run = run_benchmark(
            &[&dataset],
            &[&good, &bad],
            &[AttackMethod::Dcp, AttackMethod::Pwws],
            &shared,
            &relaxed_config(),
        )
        .unwrap();
        assert_eq!(run.reports.len(), 2);
        assert_eq!(run.failures.len(), 2);
        for failure in &run.failures {
            assert_eq!(failure.manifest.victim, "failing");
            assert!(failure.error.contains("scripted failure"));
        }
        for report in &run.reports {
            assert_ne!(report.manifest.victim, "failing");
        }
    }

    #[test]
    fn fairness_check_rejects_diverged_samples() {
        let run = planted_run();
        let mut reports = run.reports.clone();
        reports[1].results.truncate(3);
        let err = verify_fairness(&reports).unwrap_err();
        assert!(err.to_string().contains("unfair grid"));

        let mut reports = run.reports.clone();
        reports[1].manifest.seed += 1;
        assert!(verify_fairness(&reports).is_err());

        assert!(verify_fairness(&run.reports).is_ok());
    }

    #[test]
    fn zero_sample_and_text_nli_target_are_rejected() {
        let bad_size = BenchmarkConfig {
            sample_size: 0,
            ..BenchmarkConfig::default()
        };
        assert!(bad_size.validate().is_err());

        let bad_target = BenchmarkConfig {
            nli_target: AttackTarget::Text,
            ..BenchmarkConfig::default()
        };
        assert!(bad_target.validate().is_err());
    }

    #[test]
    fn aborted_metrics_count_as_cell_failures() {
        // A victim that is wrong on every input: all examples skip, the
        // success-rate denominator is empty, and the cell must abort
        // rather than report meaningless numbers.
        let labels = vec!["negative".to_string(), "positive".to_string()];
        let dataset = Dataset {
            name: "tiny".into(),
            task_kind: TaskKind::Classify,
            label_names: labels.clone(),
            examples: vec![Example::classify("only", "good film", 0, labels)],
        };
        let victim = TableVictim::new(vec![0.1, 0.9]);
        let embedder = planted_embedder();
        let tokenizer = Tokenizer::default();
        let generator = planted_generator();
        let shared = GridComponents {
            embedder: &embedder,
            tokenizer: &tokenizer,
            candidates: &generator,
        };
        let config = BenchmarkConfig {
            sample_size: 1,
            ..relaxed_config()
        };
        let run = run_benchmark(
            &[&dataset],
            &[&victim],
            &[AttackMethod::Dcp],
            &shared,
            &config,
        )
        .unwrap();
        assert!(run.reports.is_empty());
        assert_eq!(run.failures.len(), 1);
        assert!(run.failures[0].error.contains("no clean-correct"));
    }

    #[test]
    fn settings_parse_with_defaults_and_overrides() {
        let empty = BenchSettings::parse("").unwrap();
        assert_eq!(empty, BenchSettings::default());
        assert_eq!(empty.run.sample_size, 50);
        assert_eq!(empty.run.seed, 7);
        assert_eq!(empty.grid.datasets, vec!["toy_sentiment".to_string()]);
        assert_eq!(
            empty.grid.attacks,
            vec![AttackMethod::Dcp, AttackMethod::Pwws]
        );
        assert_eq!(empty.attack.lambda, 1.0);

        let partial = BenchSettings::parse(
            "[run]\nseed = 9\nformats = [\"markdown\"]\n\n[attack]\nlambda = 0.5\n",
        )
        .unwrap();
        assert_eq!(partial.run.seed, 9);
        assert_eq!(partial.run.sample_size, 50);
        assert_eq!(partial.run.formats, vec![ReportFormat::Markdown]);
        assert_eq!(partial.attack.lambda, 0.5);
        assert_eq!(partial.attack.sim_threshold, 0.85);

        let config = partial.benchmark_config();
        assert_eq!(config.seed, 9);
        assert_eq!(config.attack.lambda, 0.5);

        assert!(BenchSettings::parse("run = \"not a table\"").is_err());
        assert!(BenchSettings::parse("[run]\nseed = \"eleven\"").is_err());
    }

    #[test]
    fn report_format_round_trips_through_strings() {
        for (text, format) in [
            ("jsonl", ReportFormat::Jsonl),
            ("csv", ReportFormat::Csv),
            ("markdown", ReportFormat::Markdown),
            ("md", ReportFormat::Markdown),
        ] {
            assert_eq!(text.parse::<ReportFormat>().unwrap(), format);
        }
        assert!("yaml".parse::<ReportFormat>().is_err());
        assert_eq!(ReportFormat::Markdown.to_string(), "markdown");
    }

    fn bundled_data_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }

    #[test]
    fn bundled_reference_numbers_load_and_render() {
        let rows = load_reference_numbers(&bundled_data_dir().join("reference_numbers.csv"))
            .unwrap();
        assert_eq!(rows.len(), 40);
        let first = &rows[0];
        assert_eq!(first.dataset, "IMDB");
        assert_eq!(first.attack, "BERT-on-BERT");
        assert_eq!(first.original_accuracy, Some(90.90));
        assert_eq!(first.queries, None);

        let md = reference_markdown(&rows);
        assert!(md.contains("reported, not reproduced"));
        assert!(md.contains("| III | IMDB | BERT | BERT-on-BERT |"));
        // Query-count rows carry no accuracy columns and render markers.
        assert!(md.contains(&format!("| {ABSENT} | {ABSENT} |")));
    }

    #[test]
    fn bundled_datasets_resolve_by_name() {
        let dir = bundled_data_dir();
        let sentiment = load_grid_dataset(&dir, "toy_sentiment").unwrap();
        assert_eq!(sentiment.train.task_kind, TaskKind::Classify);
        assert!(!sentiment.train.is_empty());
        assert!(!sentiment.eval.is_empty());

        let nli = load_grid_dataset(&dir, "toy_nli").unwrap();
        assert_eq!(nli.train.task_kind, TaskKind::Nli);
        assert_eq!(nli.eval.label_names.len(), 3);

        assert!(load_grid_dataset(&dir, "no_such_set").is_err());
    }

    #[test]
    fn data_dir_resolution_prefers_explicit_path() {
        let explicit = Path::new("/somewhere/else");
        assert_eq!(resolve_data_dir(Some(explicit)), explicit);

        std::env::remove_var(DATA_DIR_ENV);
        assert_eq!(resolve_data_dir(None), PathBuf::from("data"));
        std::env::set_var(DATA_DIR_ENV, "/from/env");
        assert_eq!(resolve_data_dir(None), PathBuf::from("/from/env"));
        std::env::remove_var(DATA_DIR_ENV);
    }
}
