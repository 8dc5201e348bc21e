//! Substitution candidates from three sources: a bundled thesaurus, a
//! bundled homophone table, and an optional masked-language-model adapter.
//!
//! All sources share the same hygiene: replacements are case-matched to the
//! original surface, identity replacements are dropped under case folding,
//! and only single-token words survive.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{detokenize, match_case, tokenize, Pos, Token, TokenizedText};

/// Where a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSource {
    Thesaurus,
    Homophone,
    Mlm,
}

/// One proposed substitution at one token position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Index into the tokenized text's token list.
    pub position: usize,
    pub original: String,
    pub replacement: String,
    pub source: CandidateSource,
    /// Source-specific preference, higher preferred. Rank-based for the
    /// bundled tables, the adapter's own score for masked-LM fills.
    pub prior: f64,
}

fn is_single_word_token(word: &str) -> bool {
    let tt = tokenize(word);
    tt.tokens.len() == 1 && tt.tokens[0].is_word
}

/// The bundled synonym table. A lemma may appear under several parts of
/// speech; lookups with a known tag match only that tag, `unknown` matches
/// every entry for the lemma.
#[derive(Debug, Clone, Default)]
pub struct Thesaurus {
    entries: HashMap<String, Vec<(Pos, Vec<String>)>>,
}

impl Thesaurus {
    /// Parses `lemma<TAB>pos<TAB>syn1,syn2,...` lines. Unparsable lines and
    /// multi-word synonyms are dropped.
    pub fn parse(raw: &str) -> Self {
        let mut entries: HashMap<String, Vec<(Pos, Vec<String>)>> = HashMap::new();
        for line in raw.lines() {
            let mut parts = line.split('\t');
            let (Some(lemma), Some(pos_str), Some(syns)) =
                (parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            let Ok(pos) = pos_str.parse::<Pos>() else {
                continue;
            };
            let synonyms: Vec<String> = syns
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty() && is_single_word_token(s))
                .map(str::to_string)
                .collect();
            if !synonyms.is_empty() {
                entries
                    .entry(lemma.trim().to_string())
                    .or_default()
                    .push((pos, synonyms));
            }
        }
        Thesaurus { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&raw))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Synonyms for (lemma, pos) in file order across matching entries.
    fn lookup(&self, lemma: &str, pos: Pos) -> Vec<&str> {
        let Some(rows) = self.entries.get(lemma) else {
            return Vec::new();
        };
        rows.iter()
            .filter(|(row_pos, _)| pos == Pos::Unknown || *row_pos == pos)
            .flat_map(|(_, syns)| syns.iter().map(String::as_str))
            .collect()
    }
}

/// The bundled homophone table, expanded symmetrically: every word on a line
/// maps to all the other words on that line.
#[derive(Debug, Clone, Default)]
pub struct HomophoneTable {
    entries: HashMap<String, Vec<String>>,
}

impl HomophoneTable {
    /// Parses `word,alt1[,alt2...]` lines.
    pub fn parse(raw: &str) -> Self {
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for line in raw.lines() {
            let words: Vec<&str> = line
                .split(',')
                .map(str::trim)
                .filter(|w| !w.is_empty() && is_single_word_token(w))
                .collect();
            if words.len() < 2 {
                continue;
            }
            for &word in &words {
                let alts = entries.entry(word.to_string()).or_default();
                for &other in &words {
                    if other != word && !alts.iter().any(|a| a == other) {
                        alts.push(other.to_string());
                    }
                }
            }
        }
        HomophoneTable { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&raw))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, word: &str) -> &[String] {
        self.entries.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Fills for a masked position, supplied by an external masked language
/// model. Implementations return up to `k` (word, score) pairs with scores
/// descending.
pub trait MlmAdapter: Send + Sync {
    fn fill(&self, masked_text: &str, k: usize) -> Vec<(String, f64)>;

    /// Whether concurrent `fill` calls are safe; the harness serializes
    /// adapters that say no.
    fn concurrent_safe(&self) -> bool {
        true
    }

    fn descriptor(&self) -> String;
}

/// The placeholder spliced into the text handed to an [`MlmAdapter`].
pub const MASK_TOKEN: &str = "[MASK]";

/// Source selection and caps for candidate gathering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub sources: Vec<CandidateSource>,
    pub per_source_cap: usize,
    pub total_cap: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            sources: vec![
                CandidateSource::Thesaurus,
                CandidateSource::Homophone,
                CandidateSource::Mlm,
            ],
            per_source_cap: 10,
            total_cap: 20,
        }
    }
}

/// Candidate generation over the loaded tables plus an optional adapter.
/// Immutable after construction; both attacks in a comparison run share one
/// generator so they see identical candidate sets.
#[derive(Default)]
pub struct CandidateGenerator {
    thesaurus: Thesaurus,
    homophones: HomophoneTable,
    adapter: Option<Box<dyn MlmAdapter>>,
}

impl CandidateGenerator {
    pub fn new(thesaurus: Thesaurus, homophones: HomophoneTable) -> Self {
        CandidateGenerator {
            thesaurus,
            homophones,
            adapter: None,
        }
    }

    /// Loads `thesaurus.tsv` and `homophones.csv` from the data directory.
    pub fn from_data_dir(dir: &Path) -> Result<Self> {
        Ok(CandidateGenerator::new(
            Thesaurus::load(&dir.join("thesaurus.tsv"))?,
            HomophoneTable::load(&dir.join("homophones.csv"))?,
        ))
    }

    pub fn with_adapter(mut self, adapter: Box<dyn MlmAdapter>) -> Self {
        self.adapter = Some(adapter);
        self
    }

    pub fn has_adapter(&self) -> bool {
        self.adapter.is_some()
    }

    /// Whether concurrent `gather` calls are safe. False only when an
    /// attached adapter forbids concurrent fills; callers must then run
    /// attacks one at a time.
    pub fn concurrent_safe(&self) -> bool {
        self.adapter.as_ref().map_or(true, |a| a.concurrent_safe())
    }

    /// Filters raw replacement words into well-formed candidates: identity
    /// (case-folded) removed, multi-token fills removed, case matched to the
    /// original surface. `prior` is 1/(1+rank) over the surviving sequence.
    fn rank_filtered<'a>(
        &self,
        token: &Token,
        position: usize,
        source: CandidateSource,
        raw: impl Iterator<Item = &'a str>,
    ) -> Vec<Candidate> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for word in raw {
            let folded = word.to_lowercase();
            if folded == token.normalized || !is_single_word_token(word) {
                continue;
            }
            if !seen.insert(folded) {
                continue;
            }
            let rank = out.len();
            out.push(Candidate {
                position,
                original: token.surface.clone(),
                replacement: match_case(&token.surface, word),
                source,
                prior: 1.0 / (1.0 + rank as f64),
            });
        }
        out
    }

    /// Thesaurus lookups keyed by (normalized surface, part of speech).
    pub fn thesaurus_candidates(&self, token: &Token, position: usize) -> Vec<Candidate> {
        if !token.is_word {
            return Vec::new();
        }
        let synonyms = self.thesaurus.lookup(&token.normalized, token.pos);
        self.rank_filtered(
            token,
            position,
            CandidateSource::Thesaurus,
            synonyms.into_iter(),
        )
    }

    /// Homophone lookups; part of speech is ignored because sound-alikes
    /// rarely share one.
    pub fn homophone_candidates(&self, token: &Token, position: usize) -> Vec<Candidate> {
        if !token.is_word {
            return Vec::new();
        }
        let alts = self.homophones.lookup(&token.normalized);
        self.rank_filtered(
            token,
            position,
            CandidateSource::Homophone,
            alts.iter().map(String::as_str),
        )
    }

    /// Masks the position, asks the adapter for up to `k` fills, and applies
    /// the shared hygiene. Errors when no adapter is attached; use
    /// [`CandidateGenerator::gather`] to treat the source as optional.
    pub fn mlm_candidates(
        &self,
        tt: &TokenizedText,
        position: usize,
        k: usize,
    ) -> Result<Vec<Candidate>> {
        let adapter = self.adapter.as_deref().ok_or(Error::AdapterMissing)?;
        if position >= tt.tokens.len() {
            return Err(Error::PositionOutOfRange {
                position,
                len: tt.tokens.len(),
            });
        }
        let token = &tt.tokens[position];
        let masked = detokenize(
            tt,
            &BTreeMap::from([(position, MASK_TOKEN.to_string())]),
        )?;
        let fills = adapter.fill(&masked, k);

        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (word, score) in fills.into_iter().take(k) {
            let folded = word.to_lowercase();
            if folded == token.normalized || !is_single_word_token(&word) {
                continue;
            }
            if !seen.insert(folded) {
                continue;
            }
            out.push(Candidate {
                position,
                original: token.surface.clone(),
                replacement: match_case(&token.surface, &word),
                source: CandidateSource::Mlm,
                prior: score,
            });
        }
        Ok(out)
    }

    /// Concatenates the enabled sources in thesaurus → homophone → mlm
    /// order, deduplicates by case-folded replacement keeping the first
    /// occurrence, and truncates to `total_cap`. A missing adapter makes the
    /// mlm source empty rather than an error.
    pub fn gather(
        &self,
        tt: &TokenizedText,
        position: usize,
        config: &CandidateConfig,
    ) -> Vec<Candidate> {
        let Some(token) = tt.tokens.get(position) else {
            return Vec::new();
        };
        if !token.is_word {
            return Vec::new();
        }

        let mut combined = Vec::new();
        for source in [
            CandidateSource::Thesaurus,
            CandidateSource::Homophone,
            CandidateSource::Mlm,
        ] {
            if !config.sources.contains(&source) {
                continue;
            }
            let batch = match source {
                CandidateSource::Thesaurus => self.thesaurus_candidates(token, position),
                CandidateSource::Homophone => self.homophone_candidates(token, position),
                CandidateSource::Mlm => {
                    if self.adapter.is_some() {
                        self.mlm_candidates(tt, position, config.per_source_cap)
                            .unwrap_or_default()
                    } else {
                        Vec::new()
                    }
                }
            };
            combined.extend(batch.into_iter().take(config.per_source_cap));
        }

        let mut seen = HashSet::new();
        combined.retain(|c| seen.insert(c.replacement.to_lowercase()));
        combined.truncate(config.total_cap);
        combined
    }
}
