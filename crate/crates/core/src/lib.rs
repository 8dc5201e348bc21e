//! Adversarial word-substitution attacks on text classifiers, with the
//! victims, data handling, and evaluation metrics needed to benchmark them.
//!
//! The pieces, bottom up:
//! - [`textproc`]: span-preserving tokenization, detokenization, case
//!   matching, sentence splitting, syllable counting;
//! - [`corpus`]: datasets (classification and NLI), deterministic
//!   sampling, attack-target selection;
//! - [`victim`]: the pluggable victim-model interface, metered querying,
//!   and a trainable mean-word-vector logistic-regression reference victim;
//! - [`saliency`]: gradient and deletion word-importance scoring;
//! - [`candidates`]: substitution candidates from a bundled thesaurus,
//!   homophone table, and optional masked-LM adapter;
//! - [`attack`]: the DCP objective-guided greedy attack and the PWWS
//!   probability-weighted baseline, sharing one result shape;
//! - [`metrics`]: success rate, accuracy under attack, perturbation rate,
//!   embedding similarity, Flesch-Kincaid readability, and aggregation;
//! - [`harness`]: benchmark orchestration over datasets × attacks, with
//!   reproducible manifests and report emission.
//!
//! Determinism is load-bearing throughout: fixed seeds, portable hashing,
//! and an in-crate PRNG make byte-identical reruns possible on any host.

pub mod attack;
pub mod candidates;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod hashing;
pub mod metrics;
pub mod rng;
pub mod saliency;
pub mod textproc;
pub mod victim;

pub use attack::{AttackConfig, AttackContext, AttackMethod, AttackResult};
pub use corpus::{AttackTarget, Dataset, Example, SegmentRole, TaskKind};
pub use error::{Error, Result};
pub use harness::{BenchmarkReport, BenchSettings, RunManifest};
pub use metrics::RunMetrics;
pub use victim::{QueryMeter, VictimModel};
