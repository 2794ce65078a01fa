//! Text-to-features pipeline.
//!
//! A raw query goes through a fixed sequence of stages:
//!
//! 1. [`normalize`]: punctuation becomes whitespace, text is lowercased and split.
//! 2. [`apply_synonyms`]: longest-match phrase rewriting from a [`SynonymTable`].
//! 3. [`lemmatize`]: single-pass lookup in a [`LemmaTable`].
//! 4. [`dedupe`]: first occurrence of each token wins.
//! 5. [`extract_features`]: unigrams plus windowed skip-bigrams.
//!
//! Every stage is a pure function over immutable tables, so a [`PipelineConfig`]
//! can be shared freely between threads.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Joins the two tokens of a bigram key. It is also a token separator, so a
/// token can never contain it.
pub const BIGRAM_JOINER: char = '+';

/// Default maximum token distance for skip-bigrams.
pub const DEFAULT_WINDOW: usize = 2;

// Connector punctuation (`_` and friends) stays inside tokens so canonical
// synonym targets such as `in_passport` survive normalization.
static SEPARATOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}--\p{Pc}]|\+").expect("separator regex"));

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("invalid token {0:?}")]
    InvalidToken(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("synonym rule with an empty pattern")]
    EmptyPattern,
    #[error("duplicate synonym pattern {0:?}")]
    DuplicatePattern(String),
    #[error("bigram window must be at least 1")]
    ZeroWindow,
}

/// A lowercase, punctuation-free, whitespace-free, non-empty word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    /// Validates `surface` as a token. It must be exactly what [`normalize`]
    /// would produce for it.
    pub fn new(surface: impl Into<String>) -> Result<Self, TableError> {
        let surface = surface.into();
        let valid = !surface.is_empty()
            && !surface.chars().any(char::is_whitespace)
            && !SEPARATOR.is_match(&surface)
            && surface.chars().all(|c| simple_lowercase(c) == c);
        if valid {
            Ok(Token(surface))
        } else {
            Err(TableError::InvalidToken(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = TableError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Token::new(s)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

/// A model feature: a single token or an ordered token pair.
///
/// The textual key of a unigram is the token itself; a bigram is written
/// `first+second`, with `first` preceding `second` in the query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Unigram(Token),
    Bigram(Token, Token),
}

impl Feature {
    pub fn is_unigram(&self) -> bool {
        matches!(self, Feature::Unigram(_))
    }

    /// Tokens the feature is built from, in query order.
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        let (a, b) = match self {
            Feature::Unigram(t) => (t, None),
            Feature::Bigram(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Unigram(t) => write!(f, "{t}"),
            Feature::Bigram(a, b) => write!(f, "{a}{BIGRAM_JOINER}{b}"),
        }
    }
}

impl FromStr for Feature {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(BIGRAM_JOINER) {
            None => Ok(Feature::Unigram(Token::new(s)?)),
            Some((a, b)) => Ok(Feature::Bigram(Token::new(a)?, Token::new(b)?)),
        }
    }
}

/// Ordered phrase-rewriting rules. Longer patterns come first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    rules: Vec<SynonymRule>,
    by_first: HashMap<Token, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SynonymRule {
    pub pattern: Vec<Token>,
    pub replacement: Vec<Token>,
}

impl SynonymTable {
    pub fn new(rules: impl IntoIterator<Item = SynonymRule>) -> Result<Self, TableError> {
        let mut rules: Vec<SynonymRule> = rules.into_iter().collect();
        let mut seen = HashSet::new();
        for rule in &rules {
            if rule.pattern.is_empty() {
                return Err(TableError::EmptyPattern);
            }
            if !seen.insert(rule.pattern.clone()) {
                return Err(TableError::DuplicatePattern(join_tokens(&rule.pattern)));
            }
        }
        rules.sort_by(|a, b| {
            b.pattern
                .len()
                .cmp(&a.pattern.len())
                .then_with(|| a.pattern.cmp(&b.pattern))
        });
        let mut by_first: HashMap<Token, Vec<usize>> = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            by_first.entry(rule.pattern[0].clone()).or_default().push(i);
        }
        Ok(SynonymTable { rules, by_first })
    }

    /// Parses `pattern tokens => replacement tokens` lines. Both sides are
    /// normalized; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, replacement) =
                line.split_once("=>").ok_or_else(|| TableError::Malformed {
                    line: n + 1,
                    reason: "expected `pattern => replacement`".into(),
                })?;
            let pattern = normalize(pattern);
            if pattern.is_empty() {
                return Err(TableError::Malformed {
                    line: n + 1,
                    reason: "empty pattern".into(),
                });
            }
            rules.push(SynonymRule {
                pattern,
                replacement: normalize(replacement),
            });
        }
        SynonymTable::new(rules)
    }

    pub fn rules(&self) -> &[SynonymRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn longest_match(&self, tokens: &[Token]) -> Option<&SynonymRule> {
        let candidates = self.by_first.get(tokens.first()?)?;
        candidates
            .iter()
            .map(|&i| &self.rules[i])
            .find(|rule| tokens.starts_with(&rule.pattern))
    }
}

/// Token to lemma lookup. Lookups are single-pass, so chains are inert.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaTable {
    entries: BTreeMap<Token, Token>,
}

impl LemmaTable {
    pub fn new(entries: BTreeMap<Token, Token>) -> Self {
        LemmaTable { entries }
    }

    /// Parses `token<TAB>lemma` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (token, lemma) = line.split_once('\t').ok_or_else(|| TableError::Malformed {
                line: n + 1,
                reason: "expected `token<TAB>lemma`".into(),
            })?;
            entries.insert(Token::new(token.trim())?, Token::new(lemma.trim())?);
        }
        Ok(LemmaTable { entries })
    }

    pub fn get(&self, token: &Token) -> Option<&Token> {
        self.entries.get(token)
    }

    pub fn entries(&self) -> &BTreeMap<Token, Token> {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything the pipeline needs besides the query text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    window: usize,
    pub synonyms: SynonymTable,
    pub lemmas: LemmaTable,
}

impl PipelineConfig {
    pub fn new(
        window: usize,
        synonyms: SynonymTable,
        lemmas: LemmaTable,
    ) -> Result<Self, TableError> {
        if window == 0 {
            return Err(TableError::ZeroWindow);
        }
        Ok(PipelineConfig {
            window,
            synonyms,
            lemmas,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: DEFAULT_WINDOW,
            synonyms: SynonymTable::default(),
            lemmas: LemmaTable::default(),
        }
    }
}

/// A preprocessed query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSet {
    pub unigrams: BTreeSet<Token>,
    pub bigrams: BTreeSet<(Token, Token)>,
    /// Deduplicated tokens in first-occurrence order.
    pub tokens: Vec<Token>,
}

impl FeatureSet {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// All features, unigrams first, each group in sorted order.
    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        self.unigrams.iter().cloned().map(Feature::Unigram).chain(
            self.bigrams
                .iter()
                .map(|(a, b)| Feature::Bigram(a.clone(), b.clone())),
        )
    }
}

fn simple_lowercase(c: char) -> char {
    // Only U+0130 has a multi-char full lowercase; its simple mapping is the first char.
    c.to_lowercase().next().unwrap_or(c)
}

fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Replaces punctuation with spaces, lowercases, and splits on whitespace.
pub fn normalize(raw: &str) -> Vec<Token> {
    let spaced = SEPARATOR.replace_all(raw, " ");
    spaced
        .split_whitespace()
        .map(|w| Token(w.chars().map(simple_lowercase).collect()))
        .collect()
}

pub fn dedupe(tokens: Vec<Token>) -> Vec<Token> {
    let mut seen = HashSet::with_capacity(tokens.len());
    tokens
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// One left-to-right pass; replacements are never re-matched.
pub fn apply_synonyms(tokens: Vec<Token>, table: &SynonymTable) -> Vec<Token> {
    if table.is_empty() {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        match table.longest_match(&tokens[i..]) {
            Some(rule) => {
                out.extend(rule.replacement.iter().cloned());
                i += rule.pattern.len();
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

pub fn lemmatize(tokens: Vec<Token>, table: &LemmaTable) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| table.get(&t).cloned().unwrap_or(t))
        .collect()
}

/// Unigrams and ordered skip-bigrams of tokens at most `window` apart.
///
/// `tokens` must already be deduplicated.
pub fn extract_features(tokens: Vec<Token>, window: usize) -> FeatureSet {
    debug_assert!(window >= 1);
    let mut bigrams = BTreeSet::new();
    for (i, first) in tokens.iter().enumerate() {
        for second in tokens.iter().skip(i + 1).take(window) {
            bigrams.insert((first.clone(), second.clone()));
        }
    }
    FeatureSet {
        unigrams: tokens.iter().cloned().collect(),
        bigrams,
        tokens,
    }
}

pub fn preprocess(raw: &str, config: &PipelineConfig) -> FeatureSet {
    let tokens = normalize(raw);
    let tokens = apply_synonyms(tokens, &config.synonyms);
    let tokens = lemmatize(tokens, &config.lemmas);
    extract_features(dedupe(tokens), config.window)
}
