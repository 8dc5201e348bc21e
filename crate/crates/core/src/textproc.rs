//! Span-preserving tokenization and the text statistics behind readability
//! scoring.
//!
//! Preprocessing here is an analysis view only: tokens carry lowercase forms,
//! stop-word flags, and coarse part-of-speech tags, but perturbed text is
//! always produced by splicing replacements into the untouched original
//! string. Nothing in this module ever rewrites bytes it was not asked to.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse part-of-speech tag. `Unknown` acts as a wildcard during candidate
/// filtering, so a sparse lexicon degrades recall gracefully instead of
/// blocking substitutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
    Unknown,
}

impl std::str::FromStr for Pos {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "noun" => Ok(Pos::Noun),
            "verb" => Ok(Pos::Verb),
            "adj" => Ok(Pos::Adj),
            "adv" => Ok(Pos::Adv),
            "other" => Ok(Pos::Other),
            "unknown" => Ok(Pos::Unknown),
            _ => Err(()),
        }
    }
}

/// One surface token plus its analysis annotations.
///
/// `span` holds byte offsets into the original text, end exclusive, and
/// `original[span.0..span.1] == surface` always holds byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub span: (usize, usize),
    /// Lowercased surface, used for all lexicon lookups.
    pub normalized: String,
    /// True if the surface contains at least one letter.
    pub is_word: bool,
    pub is_stopword: bool,
    pub pos: Pos,
}

/// A text together with its token list. Substitution and reconstruction go
/// through [`detokenize`], which splices spans rather than re-joining tokens,
/// so whitespace and punctuation survive untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub original: String,
    pub tokens: Vec<Token>,
}

impl TokenizedText {
    /// Indices of word tokens (those containing at least one letter).
    pub fn word_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_word)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word).count()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits `text` into word and punctuation tokens with exact byte spans.
///
/// Words are maximal runs of alphanumerics, with an apostrophe kept inside a
/// token only when flanked by alphanumerics on both sides ("don't" is one
/// token, a quote mark is not). Every other non-whitespace character becomes
/// a single-character token. Stop-word flags and part-of-speech tags are left
/// at their defaults; use [`Tokenizer::annotate`] for the analyzed view.
pub fn tokenize(text: &str) -> TokenizedText {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_end = |j: usize| {
        if j < chars.len() {
            chars[j].0
        } else {
            text.len()
        }
    };

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        if c.is_alphanumeric() {
            loop {
                if j < chars.len() && chars[j].1.is_alphanumeric() {
                    j += 1;
                } else if j + 1 < chars.len()
                    && is_apostrophe(chars[j].1)
                    && chars[j + 1].1.is_alphanumeric()
                {
                    j += 2;
                } else {
                    break;
                }
            }
        }
        let end = byte_end(j);
        let surface = text[start..end].to_string();
        tokens.push(Token {
            normalized: surface.to_lowercase(),
            is_word: surface.chars().any(|c| c.is_alphabetic()),
            is_stopword: false,
            pos: Pos::Unknown,
            surface,
            span: (start, end),
        });
        i = j;
    }
    TokenizedText {
        original: text.to_string(),
        tokens,
    }
}

/// Tokenizer with a stop-word set and a part-of-speech lexicon attached.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
    lexicon: HashMap<String, Pos>,
}

impl Tokenizer {
    pub fn new(stopwords: HashSet<String>, lexicon: HashMap<String, Pos>) -> Self {
        Tokenizer { stopwords, lexicon }
    }

    /// Loads `stopwords.txt` and derives the part-of-speech lexicon from
    /// `thesaurus.tsv` in the given data directory. A word listed under more
    /// than one part of speech is dropped from the lexicon and falls back to
    /// the suffix heuristic.
    pub fn from_data_dir(dir: &Path) -> Result<Self> {
        let stop_path = dir.join("stopwords.txt");
        let raw = fs::read_to_string(&stop_path).map_err(|e| Error::io(&stop_path, e))?;
        let stopwords: HashSet<String> = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();

        let thes_path = dir.join("thesaurus.tsv");
        let raw = fs::read_to_string(&thes_path).map_err(|e| Error::io(&thes_path, e))?;
        let mut seen: HashMap<String, Pos> = HashMap::new();
        let mut conflicted: HashSet<String> = HashSet::new();
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
            for word in std::iter::once(lemma).chain(syns.split(',')) {
                let word = word.trim();
                if word.is_empty() {
                    continue;
                }
                match seen.get(word) {
                    Some(&p) if p != pos => {
                        conflicted.insert(word.to_string());
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(word.to_string(), pos);
                    }
                }
            }
        }
        for word in &conflicted {
            seen.remove(word);
        }
        Ok(Tokenizer::new(stopwords, seen))
    }

    /// Tokenizes and fills in stop-word flags and part-of-speech tags.
    pub fn annotate(&self, text: &str) -> TokenizedText {
        let mut tt = tokenize(text);
        for token in &mut tt.tokens {
            if !token.is_word {
                token.pos = Pos::Other;
                continue;
            }
            token.is_stopword = self.stopwords.contains(&token.normalized);
            token.pos = self.pos_of(&token.normalized, token.is_stopword);
        }
        tt
    }

    fn pos_of(&self, normalized: &str, is_stopword: bool) -> Pos {
        if is_stopword {
            return Pos::Other;
        }
        if let Some(&pos) = self.lexicon.get(normalized) {
            return pos;
        }
        let n = normalized;
        if n.ends_with("ly") {
            Pos::Adv
        } else if n.ends_with("ing") || n.ends_with("ed") {
            Pos::Verb
        } else if ["ous", "ful", "ive", "able", "ible", "al", "ic"]
            .iter()
            .any(|s| n.ends_with(s))
        {
            Pos::Adj
        } else if ["ness", "tion", "sion", "ment", "ity", "ist"]
            .iter()
            .any(|s| n.ends_with(s))
        {
            Pos::Noun
        } else {
            Pos::Unknown
        }
    }
}

/// Rebuilds the text with the given per-position replacements spliced in.
/// Positions index into `tt.tokens`; all bytes outside substituted spans,
/// whitespace included, are preserved exactly. An empty map returns the
/// original string unchanged.
pub fn detokenize(tt: &TokenizedText, substitutions: &BTreeMap<usize, String>) -> Result<String> {
    for (&position, replacement) in substitutions {
        if position >= tt.tokens.len() {
            return Err(Error::PositionOutOfRange {
                position,
                len: tt.tokens.len(),
            });
        }
        if replacement.is_empty() {
            return Err(Error::EmptyReplacement { position });
        }
    }
    let mut out = String::with_capacity(tt.original.len());
    let mut cursor = 0;
    for (i, token) in tt.tokens.iter().enumerate() {
        out.push_str(&tt.original[cursor..token.span.0]);
        match substitutions.get(&i) {
            Some(replacement) => out.push_str(replacement),
            None => out.push_str(&token.surface),
        }
        cursor = token.span.1;
    }
    out.push_str(&tt.original[cursor..]);
    Ok(out)
}

/// Transfers the casing pattern of `original` onto `replacement`: all-caps
/// stays all-caps, title case stays title case, anything else comes out
/// lowercase.
pub fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    let all_caps = letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase());
    if all_caps {
        return replacement.to_uppercase();
    }
    let title = letters.first().is_some_and(|c| c.is_uppercase());
    if title {
        let mut chars = replacement.chars();
        return match chars.next() {
            Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
            None => String::new(),
        };
    }
    replacement.to_lowercase()
}

/// Splits on runs of `.`, `!`, `?` followed by whitespace or end of text.
/// Pieces are trimmed; empty pieces are dropped, so text without terminal
/// punctuation comes back as a single sentence and "" yields no sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i].1, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let at_boundary = j >= chars.len() || chars[j].1.is_whitespace();
            if at_boundary {
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                let piece = text[start..end].trim();
                if !piece.is_empty() {
                    sentences.push(piece.to_string());
                }
                start = end;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count: maximal vowel groups (a, e, i, o, u, y), minus a
/// trailing silent "e" unless the word ends in consonant + "le", clamped to a
/// minimum of one. Case-insensitive; non-letter characters are ignored.
pub fn count_syllables(word: &str) -> Result<usize> {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Err(Error::NoLetters {
            word: word.to_string(),
        });
    }

    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }

    let n = letters.len();
    if letters[n - 1] == 'e' {
        let silent_le =
            n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !silent_le {
            groups -= 1;
        }
    }
    Ok(groups.max(1))
}
