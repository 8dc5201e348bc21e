//! Command-line surface for the attack toolkit: train the reference
//! victim, attack single inputs or whole files, run benchmark grids, and
//! inspect what an attack would see for one input.
//!
//! Every subcommand resolves its data directory the same way: an explicit
//! `--data-dir` wins, then the `DCP_DATA_DIR` environment variable, then
//! `./data`. Errors exit nonzero with a diagnostic on standard error;
//! usage errors exit with code 2.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dcp_core::attack::{
    run_dcp_attack, run_pwws_attack, AttackConfig, AttackContext, AttackMethod, AttackResult,
};
use dcp_core::candidates::CandidateGenerator;
use dcp_core::corpus::{self, AttackTarget, Dataset, Example, TaskKind};
use dcp_core::harness::{self, BenchSettings, GridComponents, ReportFormat};
use dcp_core::saliency;
use dcp_core::textproc::Tokenizer;
use dcp_core::victim::{
    self, train_reference_victim, ModelInput, QueryMeter, ReferenceEmbedder, ReferenceVictim,
    TrainConfig, VictimModel, WordVectors,
};

#[derive(Parser)]
#[command(
    name = "dcp",
    version,
    about = "Word-substitution adversarial attacks on text classifiers"
)]
struct Cli {
    /// Directory holding word vectors, thesaurus, homophones, stop words,
    /// and bundled datasets. Defaults to $DCP_DATA_DIR, then ./data.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the reference victim on a dataset and save the model file.
    TrainVictim(TrainVictimArgs),
    /// Attack one input or every example of a file; print results as JSON.
    Attack(AttackArgs),
    /// Run the benchmark grid and write result/report files.
    Benchmark(BenchmarkArgs),
    /// Show the victim's prediction, per-word saliency, and substitution
    /// candidates for one input.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct TrainVictimArgs {
    /// Named dataset: trains on <name>_train.jsonl from the data directory.
    #[arg(long, value_name = "NAME", conflicts_with = "train_file")]
    dataset: Option<String>,

    /// Explicit JSONL training file (task inferred from its rows).
    #[arg(long, value_name = "PATH")]
    train_file: Option<PathBuf>,

    /// Where to write the trained model.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,

    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,

    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,

    /// Weight-initialization seed; identical settings give an identical model.
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct AttackArgs {
    /// Saved victim model file (see train-victim).
    #[arg(long, value_name = "PATH")]
    victim: PathBuf,

    /// Attack method: dcp or pwws.
    #[arg(long, default_value = "dcp")]
    method: String,

    /// Classification text to attack.
    #[arg(long)]
    text: Option<String>,

    /// NLI premise; requires --hypothesis.
    #[arg(long, requires = "hypothesis")]
    premise: Option<String>,

    /// NLI hypothesis; requires --premise.
    #[arg(long, requires = "premise")]
    hypothesis: Option<String>,

    /// Attack every example of a JSONL dataset file; one JSON result per line.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,

    /// Gold label index; the victim's own prediction when omitted.
    #[arg(long)]
    label: Option<usize>,

    /// Field to rewrite: text, premise, or hypothesis. Defaults to text for
    /// classification and hypothesis for NLI.
    #[arg(long)]
    target: Option<String>,

    #[command(flatten)]
    knobs: AttackKnobs,
}

/// Attack-configuration overrides shared by `attack` and `benchmark`.
#[derive(Args)]
struct AttackKnobs {
    /// Weight of the embedding-drift penalty in the search objective.
    #[arg(long)]
    lambda: Option<f64>,

    /// Minimum cosine similarity a substitution must keep.
    #[arg(long)]
    sim_threshold: Option<f64>,

    /// Per-example forward-query budget for the search phase.
    #[arg(long, value_name = "N")]
    max_queries: Option<u64>,

    /// Fraction of words the attack may substitute.
    #[arg(long)]
    max_substitution_fraction: Option<f64>,
}

impl AttackKnobs {
    fn apply(&self, config: &mut AttackConfig) {
        if let Some(lambda) = self.lambda {
            config.lambda = lambda;
        }
        if let Some(sim) = self.sim_threshold {
            config.sim_threshold = sim;
        }
        if let Some(max) = self.max_queries {
            config.max_forward_queries = max;
        }
        if let Some(frac) = self.max_substitution_fraction {
            config.max_substitution_fraction = frac;
        }
    }
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Declarative settings file (TOML); flags below override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Sampling seed for every dataset in the grid.
    #[arg(long)]
    seed: Option<u64>,

    /// Examples drawn per dataset.
    #[arg(long, value_name = "N")]
    sample_size: Option<usize>,

    /// Output root; reports land in <out>/<run-id>/.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Write only this summary encoding: jsonl, csv, or markdown.
    #[arg(long)]
    format: Option<String>,

    #[command(flatten)]
    knobs: AttackKnobs,
}

#[derive(Args)]
struct InspectArgs {
    /// Saved victim model file.
    #[arg(long, value_name = "PATH")]
    victim: PathBuf,

    /// Classification text to inspect.
    #[arg(long)]
    text: Option<String>,

    /// NLI premise; requires --hypothesis.
    #[arg(long, requires = "hypothesis")]
    premise: Option<String>,

    /// NLI hypothesis; requires --premise.
    #[arg(long, requires = "premise")]
    hypothesis: Option<String>,

    /// Gold label index; the victim's own prediction when omitted.
    #[arg(long)]
    label: Option<usize>,

    /// Field to inspect: text, premise, or hypothesis.
    #[arg(long)]
    target: Option<String>,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let data_dir = harness::resolve_data_dir(cli.data_dir.as_deref());
    match cli.command {
        Command::TrainVictim(args) => train_victim(&data_dir, args),
        Command::Attack(args) => attack(&data_dir, args),
        Command::Benchmark(args) => benchmark(&data_dir, args),
        Command::Inspect(args) => inspect(&data_dir, args),
    }
}

/// Text-processing components every subcommand shares, loaded once from
/// the data directory.
struct Components {
    vectors: Arc<WordVectors>,
    embedder: ReferenceEmbedder,
    tokenizer: Tokenizer,
    candidates: CandidateGenerator,
}

impl Components {
    fn load(data_dir: &Path) -> Result<Components> {
        let vectors = Arc::new(
            WordVectors::load(&data_dir.join("wordvecs.txt"))
                .with_context(|| format!("loading word vectors from {}", data_dir.display()))?,
        );
        Ok(Components {
            embedder: ReferenceEmbedder::new(vectors.clone()),
            tokenizer: Tokenizer::from_data_dir(data_dir)?,
            candidates: CandidateGenerator::from_data_dir(data_dir)?,
            vectors,
        })
    }

    fn grid(&self) -> GridComponents<'_> {
        GridComponents {
            embedder: &self.embedder,
            tokenizer: &self.tokenizer,
            candidates: &self.candidates,
        }
    }
}

fn parse_method(s: &str) -> Result<AttackMethod> {
    match s {
        "dcp" => Ok(AttackMethod::Dcp),
        "pwws" => Ok(AttackMethod::Pwws),
        other => bail!("unknown attack method {other:?}; want dcp or pwws"),
    }
}

fn parse_target(s: Option<&str>, task: TaskKind) -> Result<AttackTarget> {
    match s {
        None => Ok(match task {
            TaskKind::Classify => AttackTarget::Text,
            TaskKind::Nli => AttackTarget::Hypothesis,
        }),
        Some("text") => Ok(AttackTarget::Text),
        Some("premise") => Ok(AttackTarget::Premise),
        Some("hypothesis") => Ok(AttackTarget::Hypothesis),
        Some(other) => bail!("unknown target {other:?}; want text, premise, or hypothesis"),
    }
}

fn load_victim(path: &Path, vectors: Arc<WordVectors>) -> Result<ReferenceVictim> {
    ReferenceVictim::load(path, vectors)
        .with_context(|| format!("loading victim model {}", path.display()))
}

/// Fraction of examples the victim labels correctly, as a percentage.
fn clean_accuracy(victim: &dyn VictimModel, dataset: &Dataset) -> Result<f64> {
    let mut meter = QueryMeter::new();
    let mut correct = 0usize;
    for ex in &dataset.examples {
        let probs = victim::predict_proba(victim, &example_input(ex), &mut meter)?;
        if victim::argmax(&probs) == ex.label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / dataset.len() as f64)
}

fn example_input(ex: &Example) -> ModelInput {
    match ex.task_kind {
        TaskKind::Classify => ModelInput::classify(ex.text.clone().unwrap_or_default()),
        TaskKind::Nli => ModelInput::nli(
            ex.premise.clone().unwrap_or_default(),
            ex.hypothesis.clone().unwrap_or_default(),
        ),
    }
}

fn train_victim(data_dir: &Path, args: TrainVictimArgs) -> Result<()> {
    let vectors = Arc::new(WordVectors::load(&data_dir.join("wordvecs.txt"))?);
    let train = match (&args.dataset, &args.train_file) {
        (Some(name), None) => harness::load_grid_dataset(data_dir, name)?.train,
        (None, Some(path)) => {
            let task = harness::sniff_task_kind(path)?;
            corpus::load_dataset(path, corpus::DataFormat::Jsonl, task)?
        }
        _ => bail!("pass exactly one of --dataset or --train-file"),
    };
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
    };
    let victim = train_reference_victim(&train, &config, vectors)?;
    let accuracy = clean_accuracy(&victim, &train)?;
    victim.save(&args.out)?;
    println!(
        "trained {} on {} ({} examples, {} epochs): train accuracy {:.2}%",
        victim.descriptor(),
        train.name,
        train.len(),
        config.epochs,
        accuracy,
    );
    println!("saved to {}", args.out.display());
    Ok(())
}

/// Builds the single ad-hoc example an `attack` or `inspect` invocation
/// describes. A missing gold label defaults to the victim's own
/// prediction, i.e. "flip whatever the model currently says".
fn single_example(
    victim: &ReferenceVictim,
    text: Option<&str>,
    premise: Option<&str>,
    hypothesis: Option<&str>,
    label: Option<usize>,
) -> Result<Example> {
    let label_names = victim.label_names().to_vec();
    let (input, build): (ModelInput, Box<dyn Fn(usize) -> Example>) =
        match (text, premise, hypothesis) {
            (Some(t), None, None) => {
                if victim.task() != TaskKind::Classify {
                    bail!("--text needs a classification victim; this one is {}", victim.task());
                }
                let t = t.to_string();
                (
                    ModelInput::classify(&t),
                    Box::new(move |gold| {
                        Example::classify("cli-1", t.clone(), gold, label_names.clone())
                    }),
                )
            }
            (None, Some(p), Some(h)) => {
                if victim.task() != TaskKind::Nli {
                    bail!("--premise/--hypothesis need an NLI victim; this one is {}", victim.task());
                }
                let (p, h) = (p.to_string(), h.to_string());
                (
                    ModelInput::nli(&p, &h),
                    Box::new(move |gold| {
                        Example::nli("cli-1", p.clone(), h.clone(), gold, label_names.clone())
                    }),
                )
            }
            _ => bail!("pass --text, or --premise with --hypothesis"),
        };
    let gold = match label {
        Some(l) => l,
        None => {
            let probs = victim::predict_proba(victim, &input, &mut QueryMeter::new())?;
            victim::argmax(&probs)
        }
    };
    Ok(build(gold))
}

fn attack(data_dir: &Path, args: AttackArgs) -> Result<()> {
    let components = Components::load(data_dir)?;
    let victim = load_victim(&args.victim, components.vectors.clone())?;
    let method = parse_method(&args.method)?;
    let mut config = AttackConfig::default();
    args.knobs.apply(&mut config);

    let ctx = AttackContext {
        model: &victim,
        embedder: &components.embedder,
        tokenizer: &components.tokenizer,
        candidates: &components.candidates,
    };
    let run_one = |ex: &Example, target: AttackTarget| -> Result<AttackResult> {
        Ok(match method {
            AttackMethod::Dcp => run_dcp_attack(&ctx, ex, target, &config)?,
            AttackMethod::Pwws => run_pwws_attack(&ctx, ex, target, &config)?,
        })
    };

    if let Some(path) = &args.file {
        if args.text.is_some() || args.premise.is_some() {
            bail!("--file replaces --text/--premise/--hypothesis");
        }
        let task = harness::sniff_task_kind(path)?;
        let dataset = corpus::load_dataset(path, corpus::DataFormat::Jsonl, task)?;
        let target = parse_target(args.target.as_deref(), task)?;
        let mut successes = 0usize;
        for ex in &dataset.examples {
            let result = run_one(ex, target)?;
            successes += usize::from(result.success);
            println!("{}", serde_json::to_string(&result)?);
        }
        eprintln!(
            "attacked {} examples with {method}: {successes} flipped",
            dataset.len(),
        );
        return Ok(());
    }

    let example = single_example(
        &victim,
        args.text.as_deref(),
        args.premise.as_deref(),
        args.hypothesis.as_deref(),
        args.label,
    )?;
    let target = parse_target(args.target.as_deref(), example.task_kind)?;
    let result = run_one(&example, target)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

fn benchmark(data_dir: &Path, args: BenchmarkArgs) -> Result<()> {
    let mut settings = match &args.config {
        Some(path) => BenchSettings::load(path)
            .with_context(|| format!("loading settings from {}", path.display()))?,
        None => BenchSettings::default(),
    };
    if let Some(seed) = args.seed {
        settings.run.seed = seed;
    }
    if let Some(n) = args.sample_size {
        settings.run.sample_size = n;
    }
    if let Some(out) = args.out {
        settings.run.out = out;
    }
    if let Some(format) = &args.format {
        settings.run.formats = vec![format.parse::<ReportFormat>()?];
    }
    args.knobs.apply(&mut settings.attack);

    let components = Components::load(data_dir)?;
    let config = settings.benchmark_config();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for name in &settings.grid.datasets {
        let grid_dataset = harness::load_grid_dataset(data_dir, name)
            .with_context(|| format!("loading dataset {name:?} from {}", data_dir.display()))?;
        let victim =
            train_reference_victim(&grid_dataset.train, &settings.victim, components.vectors.clone())?;
        let run = harness::run_benchmark(
            &[&grid_dataset.eval],
            &[&victim],
            &settings.grid.attacks,
            &components.grid(),
            &config,
        )?;
        reports.extend(run.reports);
        failures.extend(run.failures);
    }

    for failure in &failures {
        eprintln!("cell {} failed: {}", failure.manifest.cell_id(), failure.error);
    }
    if reports.is_empty() {
        bail!("every benchmark cell failed");
    }

    let reference_path = data_dir.join("reference_numbers.csv");
    let reference = if reference_path.exists() {
        Some(harness::load_reference_numbers(&reference_path)?)
    } else {
        None
    };

    let emitted = harness::emit_report(
        &reports,
        &settings.run.out,
        &settings.run.formats,
        reference.as_deref(),
    )?;
    for report in &reports {
        let m = &report.metrics;
        println!(
            "{}: clean {:.2}%, under attack {:.2}%, ASR {:.2}%, mean queries {:.1} [{:.2}s]",
            report.manifest.cell_id(),
            m.clean_accuracy,
            m.accuracy_under_attack,
            m.attack_success_rate,
            m.mean_queries,
            report.wall_time.as_secs_f64(),
        );
    }
    for file in &emitted.files {
        println!("wrote {}", file.display());
    }
    if !failures.is_empty() {
        bail!("{} benchmark cell(s) failed", failures.len());
    }
    Ok(())
}

fn inspect(data_dir: &Path, args: InspectArgs) -> Result<()> {
    let components = Components::load(data_dir)?;
    let victim = load_victim(&args.victim, components.vectors.clone())?;
    let example = single_example(
        &victim,
        args.text.as_deref(),
        args.premise.as_deref(),
        args.hypothesis.as_deref(),
        args.label,
    )?;
    let target = parse_target(args.target.as_deref(), example.task_kind)?;
    let (attacked_text, role) = match target {
        AttackTarget::Text => (example.text.clone().unwrap_or_default(), "text"),
        AttackTarget::Premise => (example.premise.clone().unwrap_or_default(), "premise"),
        AttackTarget::Hypothesis => (example.hypothesis.clone().unwrap_or_default(), "hypothesis"),
    };

    let input = example_input(&example);
    let mut meter = QueryMeter::new();
    let probs = victim::predict_proba(&victim, &input, &mut meter)?;
    let predicted = victim::argmax(&probs);
    let names = victim.label_names();
    println!(
        "prediction: {} (p = {:.4}); gold: {}",
        names[predicted], probs[predicted], names[example.label],
    );

    let tt = components.tokenizer.annotate(&attacked_text);
    let profile = if victim.supports_gradients() {
        saliency::gradient_saliency(&victim, &input, target.into(), example.label, &mut meter)?
    } else {
        saliency::deletion_saliency(&victim, &input, target.into(), example.label, &mut meter)?
    };
    let config = AttackConfig::default();
    let ranked = saliency::rank_positions(&profile, &tt, config.position_filters())?;

    // Scores are stored per word ordinal; map token index back to ordinal.
    let word_positions = tt.word_positions();
    let score_of = |pos: usize| {
        word_positions
            .iter()
            .position(|&p| p == pos)
            .map(|i| profile.scores[i])
            .unwrap_or_default()
    };

    println!(
        "saliency ({:?}) over the {role} field, most important first:",
        profile.method,
    );
    let candidate_config = config.candidate_config();
    for pos in ranked {
        let gathered = components.candidates.gather(&tt, pos, &candidate_config);
        let listing = if gathered.is_empty() {
            "(none)".to_string()
        } else {
            gathered
                .iter()
                .map(|c| c.replacement.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!(
            "  [{pos:>3}] {:<20} score {:>9.6}  candidates: {listing}",
            tt.tokens[pos].surface,
            score_of(pos),
        );
    }
    Ok(())
}
