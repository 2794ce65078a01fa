//! Synthetic labeled query corpus with shared function words.
//!
//! Each class owns a small set of content words; every query mixes content
//! words of its class with function words drawn from a pool shared by all
//! classes. Generated words use only the letters outside the reserved unknown
//! prefix, so injected tokens can never collide with them.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TestCase, IRRELEVANT};
use crate::model::CorpusExample;

const CONSONANTS: &[u8] = b"bdfgklmnprstv";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub paraphrases: usize,
    pub test_paraphrases: usize,
    pub content_words: usize,
    pub function_words: usize,
    pub query_len: usize,
    /// Share of each query taken by shared function words.
    pub function_share: f64,
    pub irrelevant: usize,
    pub irrelevant_len: usize,
    /// Share of each irrelevant query taken by in-vocabulary function words.
    pub irrelevant_known_share: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 20,
            paraphrases: 10,
            test_paraphrases: 5,
            content_words: 8,
            function_words: 20,
            query_len: 7,
            function_share: 0.3,
            irrelevant: 100,
            irrelevant_len: 6,
            irrelevant_known_share: 0.5,
            seed: 2020,
        }
    }
}

impl SyntheticSpec {
    fn function_per_query(&self) -> usize {
        (self.function_share * self.query_len as f64).round() as usize
    }

    fn content_per_query(&self) -> usize {
        (self.query_len - self.function_per_query()).min(self.content_words)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Vec<CorpusExample>,
    /// Fresh paraphrases built only from words that occur in `train`.
    pub clean: Vec<TestCase>,
    /// Out-of-vocabulary words mixed with function words, labeled irrelevant.
    pub irrelevant: Vec<TestCase>,
    pub function_words: Vec<String>,
}

pub fn class_label(i: usize) -> String {
    format!("class_{i:02}")
}

struct WordMint {
    rng: ChaCha8Rng,
    used: BTreeSet<String>,
}

impl WordMint {
    fn fresh(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(&mut self.rng).unwrap() as char);
                w.push(*VOWELS.choose(&mut self.rng).unwrap() as char);
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticData {
    let mut mint = WordMint {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        used: BTreeSet::new(),
    };
    let function_words: Vec<String> = (0..spec.function_words).map(|_| mint.fresh()).collect();
    let vocab: Vec<Vec<String>> = (0..spec.classes)
        .map(|_| (0..spec.content_words).map(|_| mint.fresh()).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let n_func = spec.function_per_query();
    let n_content = spec.content_per_query();

    let compose = |rng: &mut ChaCha8Rng,
                   class: usize,
                   forced_content: Option<usize>,
                   forced_func: Option<usize>| {
        let words = &vocab[class];
        let mut picks: Vec<&String> = Vec::with_capacity(spec.query_len);
        if let Some(i) = forced_content {
            picks.push(&words[i % words.len()]);
        }
        let rest: Vec<&String> = words.iter().filter(|w| !picks.contains(w)).collect();
        picks.extend(
            rest.choose_multiple(rng, n_content.saturating_sub(picks.len()))
                .copied(),
        );
        let mut funcs: Vec<&String> = Vec::new();
        if let Some(i) = forced_func {
            funcs.push(&function_words[i % function_words.len()]);
        }
        let rest: Vec<&String> = function_words
            .iter()
            .filter(|w| !funcs.contains(w))
            .collect();
        funcs.extend(
            rest.choose_multiple(rng, n_func.saturating_sub(funcs.len()))
                .copied(),
        );
        picks.extend(funcs);
        picks.shuffle(rng);
        picks
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut train = Vec::with_capacity(spec.classes * spec.paraphrases);
    for class in 0..spec.classes {
        for p in 0..spec.paraphrases {
            // forcing guarantees every content and function word appears in training
            let index = class * spec.paraphrases + p;
            let forced_func = (n_func > 0).then_some(index);
            let query = compose(&mut rng, class, Some(p), forced_func);
            train.push(CorpusExample::new(query, class_label(class)));
        }
    }
    let mut clean = Vec::with_capacity(spec.classes * spec.test_paraphrases);
    for class in 0..spec.classes {
        for _ in 0..spec.test_paraphrases {
            clean.push(TestCase::new(
                compose(&mut rng, class, None, None),
                class_label(class),
            ));
        }
    }

    let n_known = (spec.irrelevant_known_share * spec.irrelevant_len as f64).round() as usize;
    let irrelevant = (0..spec.irrelevant)
        .map(|_| {
            let mut words: Vec<String> = function_words
                .choose_multiple(&mut rng, n_known.min(function_words.len()))
                .cloned()
                .collect();
            while words.len() < spec.irrelevant_len {
                words.push(mint.fresh());
            }
            words.shuffle(&mut rng);
            TestCase::new(words.join(" "), IRRELEVANT)
        })
        .collect();

    SyntheticData {
        train,
        clean,
        irrelevant,
        function_words,
    }
}
