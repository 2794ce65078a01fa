use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EvalError, TestCase};
use crate::preprocess::{normalize, Token};

/// Prefix reserved for synthetic unknown tokens. Generated corpora never use
/// the letters `z` or `q`, and real vocabularies are not expected to contain it.
pub const RESERVED_PREFIX: &str = "zq";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionSpec {
    pub fraction: f64,
    pub seed: u64,
    pub token_length: usize,
}

impl InjectionSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        InjectionSpec {
            fraction,
            seed,
            token_length: 8,
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(EvalError::InvalidSpec("fraction must lie in [0, 1]"));
        }
        if self.token_length <= RESERVED_PREFIX.len() {
            return Err(EvalError::InvalidSpec(
                "token_length must exceed the reserved prefix",
            ));
        }
        Ok(())
    }

    /// Independent generator for case `index`.
    pub(crate) fn rng_for(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// A fresh token under the reserved prefix, `length` chars long.
pub fn unknown_token<R: Rng>(rng: &mut R, length: usize) -> Token {
    let mut s = String::with_capacity(length);
    s.push_str(RESERVED_PREFIX);
    while s.len() < length {
        s.push(rng.random_range(b'a'..=b'z') as char);
    }
    Token::new(s).expect("generated token is valid")
}

/// Result of injecting into one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Injected {
    pub case: TestCase,
    pub replaced: usize,
    pub original_len: usize,
}

impl Injected {
    pub fn unknown_share(&self) -> f64 {
        if self.original_len == 0 {
            0.0
        } else {
            self.replaced as f64 / self.original_len as f64
        }
    }
}

/// Replaces `ceil(fraction * n)` token positions of case number `index` with
/// reserved unknown tokens. The label is left unchanged.
pub fn inject_unknown(
    case: &TestCase,
    index: usize,
    spec: &InjectionSpec,
) -> Result<Injected, EvalError> {
    spec.validate()?;
    let mut tokens = normalize(&case.query);
    let n = tokens.len();
    if spec.fraction == 0.0 {
        return Ok(Injected {
            case: case.clone(),
            replaced: 0,
            original_len: n,
        });
    }
    if n == 0 {
        return Err(EvalError::EmptyQuery(index));
    }
    let k = ((spec.fraction * n as f64).ceil() as usize).min(n);
    let mut rng = spec.rng_for(index);
    let mut positions = index::sample(&mut rng, n, k).into_vec();
    positions.sort_unstable();

    let mut taken: HashSet<Token> = tokens.iter().cloned().collect();
    for &p in &positions {
        let fresh = loop {
            let t = unknown_token(&mut rng, spec.token_length);
            if taken.insert(t.clone()) {
                break t;
            }
        };
        tokens[p] = fresh;
    }
    let query = tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Injected {
        case: TestCase {
            query,
            expected: case.expected.clone(),
        },
        replaced: k,
        original_len: n,
    })
}
