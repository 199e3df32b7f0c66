//! Deterministic pseudo-random language model for tests and benchmarks.

use crate::corpus::TokenId;
use crate::error::Result;
use crate::lm::{check_ids, Direction, LanguageModel};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Every `(source, prefix)` gets an independent softmax over hashed logits.
///
/// `spread` scales the logits: 0 gives a uniform model, large values give
/// near-deterministic ones.
#[derive(Debug, Clone)]
pub struct RandomLm {
    vocab_size: usize,
    direction: Direction,
    seed: u64,
    spread: f64,
}

impl RandomLm {
    pub fn new(vocab_size: usize, direction: Direction, seed: u64) -> Self {
        Self {
            vocab_size,
            direction,
            seed,
            spread: 3.0,
        }
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }

    fn context_hash(&self, source: &[TokenId], prefix: &[TokenId]) -> u64 {
        let mut h = splitmix64(self.seed);
        for t in source {
            h = splitmix64(h ^ u64::from(t.0));
        }
        h = splitmix64(h ^ 0xdead_beef);
        for t in prefix {
            h = splitmix64(h ^ u64::from(t.0));
        }
        h
    }
}

impl LanguageModel for RandomLm {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn next_token_logprobs(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<Vec<f64>> {
        check_ids(source, self.vocab_size)?;
        check_ids(prefix, self.vocab_size)?;
        let h = self.context_hash(source, prefix);
        let logits: Vec<f64> = (0..self.vocab_size as u64)
            .map(|w| {
                let unit = (splitmix64(h.wrapping_add(w)) >> 11) as f64 / (1u64 << 53) as f64;
                self.spread * (2.0 * unit - 1.0)
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok(logits.into_iter().map(|l| l - log_z).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_and_pure() {
        let lm = RandomLm::new(7, Direction::Regular, 3);
        let a = lm.next_token_logprobs(&[TokenId(4)], &[TokenId(5)]).unwrap();
        let b = lm.next_token_logprobs(&[TokenId(4)], &[TokenId(5)]).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let c = lm.next_token_logprobs(&[TokenId(4)], &[TokenId(6)]).unwrap();
        assert_ne!(a, c);
    }
}
