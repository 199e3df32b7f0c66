//! Conditional language models consumed by the decoders.

mod ngram;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{reverse_target, TokenId};
use crate::error::{Error, Result};

pub use ngram::{ConditionalNGramLm, ContextCounts, NGramConfig};

/// Order in which a model emits the target sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Left to right.
    Regular,
    /// Right to left: trained on reversed targets.
    Reverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Regular => "regular",
            Self::Reverse => "reverse",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Self::Regular),
            "reverse" => Ok(Self::Reverse),
            other => Err(Error::InvalidParameter(format!("unknown direction {other:?}"))),
        }
    }
}

/// A source-conditioned next-token distribution over a fixed vocabulary.
///
/// Implementations must be pure: the same query always yields the same
/// vector, and `token_logprob` must return exactly the corresponding entry
/// of `next_token_logprobs` so that chain-rule sums are bit-identical
/// whichever path computes them.
pub trait LanguageModel: Sync {
    fn vocab_size(&self) -> usize;

    fn direction(&self) -> Direction;

    /// Log-probabilities of every token id following `prefix` (which never contains EOS).
    fn next_token_logprobs(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<Vec<f64>>;

    fn token_logprob(&self, source: &[TokenId], prefix: &[TokenId], token: TokenId) -> Result<f64> {
        check_ids(&[token], self.vocab_size())?;
        Ok(self.next_token_logprobs(source, prefix)?[token.index()])
    }

    /// Chain-rule sum over `tokens`, accumulated left to right from 0.0.
    /// Accepts unfinished sequences; EOS may only appear last.
    fn prefix_logprob(&self, source: &[TokenId], tokens: &[TokenId]) -> Result<f64> {
        if let Some(pos) = tokens.iter().position(|&t| t == TokenId::EOS) {
            if pos + 1 != tokens.len() {
                return Err(Error::InvalidSequence("EOS before the end of the sequence".into()));
            }
        }
        let mut total = 0.0;
        for t in 0..tokens.len() {
            total += self.token_logprob(source, &tokens[..t], tokens[t])?;
        }
        Ok(total)
    }

    /// log P(target | source) for a finished target (EOS exactly once, at the end).
    fn sequence_logprob(&self, source: &[TokenId], target: &[TokenId]) -> Result<f64> {
        if target.last() != Some(&TokenId::EOS) {
            return Err(Error::InvalidSequence("target must end with EOS".into()));
        }
        self.prefix_logprob(source, target)
    }

    /// Scores a regular-order target (without EOS) under a reverse model by
    /// reversing it and appending EOS.
    fn reverse_sequence_logprob(&self, source: &[TokenId], target_regular_order: &[TokenId]) -> Result<f64> {
        if self.direction() != Direction::Reverse {
            return Err(Error::Direction {
                expected: Direction::Reverse,
                found: self.direction(),
            });
        }
        if target_regular_order.contains(&TokenId::EOS) {
            return Err(Error::InvalidSequence(
                "regular-order target must not contain EOS".into(),
            ));
        }
        let mut reversed = reverse_target(target_regular_order);
        reversed.push(TokenId::EOS);
        self.sequence_logprob(source, &reversed)
    }
}

pub(crate) fn check_ids(ids: &[TokenId], vocab_size: usize) -> Result<()> {
    match ids.iter().find(|t| t.index() >= vocab_size) {
        Some(t) => Err(Error::VocabularyMismatch {
            id: t.0,
            size: vocab_size,
        }),
        None => Ok(()),
    }
}
