//! Corpus metrics and decode analyses.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::Serialize;

use crate::beam::{DecodeOutput, Hypothesis};
use crate::corpus::{reverse_target, TokenId};
use crate::error::{Error, Result};
use crate::lm::Direction;
use crate::similarity::{clipped_matches, smoothed_bleu};

pub const BLEU_ORDER: usize = 4;
pub const DEFAULT_TOP_K: usize = 50;

/// Clipped n-gram statistics summed over a corpus, for orders 1 through 4.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BleuAccumulator {
    pub matches: [u64; BLEU_ORDER],
    pub totals: [u64; BLEU_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
    pub pairs: u64,
}

impl BleuAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<T: Eq + Hash>(&mut self, candidate: &[T], reference: &[T]) {
        for n in 1..=BLEU_ORDER {
            let (m, t) = clipped_matches(candidate, reference, n);
            self.matches[n - 1] += m;
            self.totals[n - 1] += t;
        }
        self.candidate_len += candidate.len() as u64;
        self.reference_len += reference.len() as u64;
        self.pairs += 1;
    }

    pub fn merge(&mut self, other: &BleuAccumulator) {
        for n in 0..BLEU_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
        self.pairs += other.pairs;
    }

    /// BLEU-4 on the 0..=100 scale, 0 when some order has no match at all.
    pub fn score(&self) -> Result<f64> {
        if self.pairs == 0 {
            return Err(Error::InvalidParameter("BLEU over an empty corpus".into()));
        }
        if self.matches.contains(&0) {
            return Ok(0.0);
        }
        let log_precision: f64 = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| (m as f64 / t as f64).ln())
            .sum();
        let brevity = standard_brevity(self.candidate_len, self.reference_len);
        Ok(100.0 * brevity * (log_precision / BLEU_ORDER as f64).exp())
    }
}

/// `min(1, exp(1 − r/c))`, and 0 for an empty candidate.
fn standard_brevity(candidate_len: u64, reference_len: u64) -> f64 {
    if candidate_len == 0 {
        return 0.0;
    }
    if candidate_len >= reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

/// Micro-averaged BLEU-4 over `(candidate, reference)` pairs, scaled to 0..=100.
pub fn corpus_bleu4<T, S>(pairs: &[(S, S)]) -> Result<f64>
where
    T: Eq + Hash,
    S: AsRef<[T]>,
{
    let mut acc = BleuAccumulator::new();
    for (candidate, reference) in pairs {
        acc.add(candidate.as_ref(), reference.as_ref());
    }
    acc.score()
}

/// Sentence BLEU-4 in `[0, 1]` with add-one smoothing and the standard brevity penalty.
pub fn sentence_bleu4<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> f64 {
    let brevity = standard_brevity(candidate.len() as u64, reference.len() as u64);
    if brevity == 0.0 {
        return 0.0;
    }
    smoothed_bleu(candidate, reference, &[0.25; BLEU_ORDER], brevity)
}

/// Unique n-grams across all sentences divided by the total number of words.
pub fn distinct_n<T, S>(sentences: &[S], n: usize) -> Result<f64>
where
    T: Eq + Hash,
    S: AsRef<[T]>,
{
    if n == 0 {
        return Err(Error::InvalidParameter("distinct-n needs n >= 1".into()));
    }
    let words: usize = sentences.iter().map(|s| s.as_ref().len()).sum();
    if words == 0 {
        return Err(Error::InvalidParameter("distinct-n over an empty corpus".into()));
    }
    let unique: HashSet<&[T]> = sentences.iter().flat_map(|s| s.as_ref().windows(n)).collect();
    Ok(unique.len() as f64 / words as f64)
}

/// 1-based rank of the candidate with the highest sentence BLEU-4 against
/// `reference`, ties to the lower rank.
pub fn best_rank<T, S>(candidates: &[S], reference: &[T]) -> Option<usize>
where
    T: Eq + Hash,
    S: AsRef<[T]>,
{
    let mut best: Option<(f64, usize)> = None;
    for (idx, candidate) in candidates.iter().enumerate() {
        let score = sentence_bleu4(candidate.as_ref(), reference);
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, idx));
        }
    }
    best.map(|(_, idx)| idx + 1)
}

/// The beam member with the highest sentence BLEU-4 against `reference`, and
/// its 1-based rank. Ties go to the lower rank.
pub fn best_hypothesis<'a>(beam: &'a [Hypothesis], reference: &[TokenId]) -> Option<(&'a Hypothesis, usize)> {
    let contents: Vec<&[TokenId]> = beam.iter().map(Hypothesis::content).collect();
    best_rank(&contents, reference).map(|rank| (&beam[rank - 1], rank))
}

/// How often each beam rank was selected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankHistogram {
    /// `counts[r - 1]` runs selected rank `r`.
    pub counts: Vec<u64>,
}

impl RankHistogram {
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, beam_size: usize) -> Result<Self> {
        let mut counts = vec![0; beam_size];
        for index in indices {
            if index < 1 || index > beam_size {
                return Err(Error::InvalidParameter(format!(
                    "selected index {index} outside 1..={beam_size}"
                )));
            }
            counts[index - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn count(&self, rank: usize) -> u64 {
        rank.checked_sub(1)
            .and_then(|i| self.counts.get(i))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn rank_histogram(runs: &[DecodeOutput], beam_size: usize) -> Result<RankHistogram> {
    RankHistogram::from_indices(runs.iter().map(|r| r.selected_index), beam_size)
}

/// The `top_k` most frequent target words at 1-based `position`, reading
/// targets right to left for [`Direction::Reverse`]. Sorted by descending
/// count, then word.
pub fn word_position_frequency<T, S>(
    targets: &[T],
    position: usize,
    direction: Direction,
    top_k: usize,
) -> Result<Vec<(String, u64)>>
where
    T: AsRef<[S]>,
    S: AsRef<str> + Clone,
{
    if !(1..=3).contains(&position) {
        return Err(Error::InvalidParameter(format!(
            "position must be 1, 2 or 3, got {position}"
        )));
    }
    if top_k < 1 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for target in targets {
        let target = target.as_ref();
        let word = match direction {
            Direction::Regular => target.get(position - 1).cloned(),
            Direction::Reverse => reverse_target(target).get(position - 1).cloned(),
        };
        if let Some(word) = word {
            *counts.entry(word.as_ref().to_string()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    Ok(ranked)
}
