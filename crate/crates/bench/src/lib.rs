//! Shared fixtures for the criterion benchmarks: a deterministic small
//! victim, matching candidate tables, and sample texts, so every bench
//! measures the same workload.

use std::path::PathBuf;
use std::sync::Arc;

use dcp_core::candidates::CandidateGenerator;
use dcp_core::corpus::{DataFormat, TaskKind};
use dcp_core::textproc::Tokenizer;
use dcp_core::victim::{ReferenceEmbedder, ReferenceVictim, WordVectors};

/// Repository-level `data/` directory, resolved relative to this crate.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// A review-like paragraph long enough to exercise the search loops.
pub const SAMPLE_TEXT: &str = "The film opens with a stunning sequence, and the acting stays \
convincing throughout. A weak script undermines the second half, yet the direction remains \
confident and the pacing never drags. Overall an enjoyable, memorable picture.";

/// Everything an attack invocation needs, loaded once per process.
pub struct BenchFixture {
    pub vectors: Arc<WordVectors>,
    pub embedder: ReferenceEmbedder,
    pub victim: ReferenceVictim,
    pub tokenizer: Tokenizer,
    pub generator: CandidateGenerator,
}

impl BenchFixture {
    /// Loads the bundled tables and trains a small sentiment victim.
    pub fn load() -> Self {
        let dir = data_dir();
        let vectors = Arc::new(WordVectors::load(&dir.join("wordvecs.txt")).expect("word vectors"));
        let embedder = ReferenceEmbedder::new(Arc::clone(&vectors));
        let dataset = dcp_core::corpus::load_dataset(
            &dir.join("toy_sentiment_train.jsonl"),
            DataFormat::Jsonl,
            TaskKind::Classify,
        )
        .expect("training data");
        let victim = dcp_core::victim::train_reference_victim(
            &dataset,
            &dcp_core::victim::TrainConfig::default(),
            Arc::clone(&vectors),
        )
        .expect("training");
        let tokenizer = Tokenizer::from_data_dir(&dir).expect("tokenizer tables");
        let generator = CandidateGenerator::from_data_dir(&dir).expect("candidate tables");
        BenchFixture {
            vectors,
            embedder,
            victim,
            tokenizer,
            generator,
        }
    }
}
