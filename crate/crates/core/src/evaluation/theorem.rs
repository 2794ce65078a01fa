use std::collections::HashSet;

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::inject::unknown_token;
use super::EvalError;
use crate::inference::classify;
use crate::model::{DiscountStage, InaModel};
use crate::preprocess::Token;

const MAX_APPENDED: usize = 5;
const TOKEN_LENGTH: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub trials: usize,
    /// Pairs of queries that differ only in unknown token identity.
    pub identity_passed: usize,
    pub identity_failed: usize,
    /// Unknown-count sweeps checked for non-increasing confidence. Skipped
    /// when the discount is applied before activation.
    pub monotone_passed: usize,
    pub monotone_failed: usize,
}

impl TheoremReport {
    pub fn all_passed(&self) -> bool {
        self.identity_failed == 0 && self.monotone_failed == 0
    }
}

fn fresh_unknowns(rng: &mut ChaCha8Rng, k: usize, taken: &mut HashSet<Token>) -> Vec<Token> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let t = unknown_token(rng, TOKEN_LENGTH);
        if taken.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

fn with_suffix(base: &str, suffix: &[Token]) -> String {
    let mut q = base.to_string();
    for t in suffix {
        q.push(' ');
        q.push_str(t.as_str());
    }
    q
}

/// Checks that classification depends on the number of unknown tokens and
/// never on which tokens they are, and that confidence does not grow as
/// more unknown tokens are appended.
pub fn theorem_suite(
    model: &InaModel,
    trials: usize,
    seed: u64,
) -> Result<TheoremReport, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let representatives: Vec<&String> = model.representatives().values().collect();
    let check_monotone = model.config().discount_stage == DiscountStage::PostActivation;
    let mut report = TheoremReport {
        trials,
        ..TheoremReport::default()
    };

    for trial in 0..trials {
        let base = if trial % 2 == 0 {
            representatives[rng.random_range(0..representatives.len())].clone()
        } else {
            let n = rng.random_range(1..=6);
            model
                .vocabulary()
                .iter()
                .choose_multiple(&mut rng, n)
                .into_iter()
                .map(Token::as_str)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let k = rng.random_range(0..=MAX_APPENDED);
        let mut taken: HashSet<Token> = model.vocabulary().iter().cloned().collect();
        let first = fresh_unknowns(&mut rng, k, &mut taken);
        let second = fresh_unknowns(&mut rng, k, &mut taken);

        let a = classify(&with_suffix(&base, &first), model)?;
        let b = classify(&with_suffix(&base, &second), model)?;
        if a.breakdown.to_bits() == b.breakdown.to_bits() && a.decision == b.decision {
            report.identity_passed += 1;
        } else {
            report.identity_failed += 1;
        }

        if check_monotone {
            let sweep = fresh_unknowns(&mut rng, MAX_APPENDED, &mut taken);
            let mut previous = classify(&base, model)?.breakdown;
            let mut ok = true;
            for u in 1..=MAX_APPENDED {
                let current = classify(&with_suffix(&base, &sweep[..u]), model)?.breakdown;
                for (before, after) in previous.classes.iter().zip(&current.classes) {
                    if before.ai >= 0.0 && after.confidence > before.confidence {
                        ok = false;
                    }
                }
                previous = current;
            }
            if ok {
                report.monotone_passed += 1;
            } else {
                report.monotone_failed += 1;
            }
        }
    }
    Ok(report)
}
