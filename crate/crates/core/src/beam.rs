//! Vanilla beam search with GNMT length normalization.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{reverse_target, TokenId};
use crate::error::{Error, Result};
use crate::lm::LanguageModel;

pub const DEFAULT_ALPHA: f64 = 0.6;

/// Beam size, maximum hypothesis length (EOS included) and length-penalty exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub beam_size: usize,
    pub max_len: usize,
    pub alpha: f64,
}

impl SearchParams {
    pub fn new(beam_size: usize, max_len: usize) -> Self {
        Self {
            beam_size,
            max_len,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size < 1 {
            return Err(Error::InvalidParameter("beam size must be at least 1".into()));
        }
        if self.max_len < 1 {
            return Err(Error::InvalidParameter("maximum length must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `((5 + length)^alpha) / (6^alpha)`.
pub fn length_penalty(length: usize, alpha: f64) -> Result<f64> {
    if length < 1 {
        return Err(Error::InvalidParameter("length penalty needs length >= 1".into()));
    }
    Ok((5.0 + length as f64).powf(alpha) / 6f64.powf(alpha))
}

pub fn normalized_score(logprob: f64, length: usize, alpha: f64) -> Result<f64> {
    Ok(logprob / length_penalty(length, alpha)?)
}

/// A target sequence without BOS. `finished` holds exactly when the last token is EOS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub logprob: f64,
    pub finished: bool,
}

impl Hypothesis {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens with the trailing EOS removed.
    pub fn content(&self) -> &[TokenId] {
        match self.tokens.split_last() {
            Some((&TokenId::EOS, rest)) => rest,
            _ => &self.tokens,
        }
    }

    pub fn normalized_score(&self, alpha: f64) -> f64 {
        // Hypotheses produced by search are never empty.
        self.logprob / length_penalty(self.len().max(1), alpha).expect("length >= 1")
    }

    /// Reverses the content and keeps EOS (if any) at the end. Used to bring
    /// reverse-model hypotheses into regular order and back; it is an involution.
    pub fn unreversed(&self) -> Hypothesis {
        let mut tokens = reverse_target(self.content());
        if self.finished {
            tokens.push(TokenId::EOS);
        }
        Hypothesis {
            tokens,
            logprob: self.logprob,
            finished: self.finished,
        }
    }
}

/// Descending score, then ascending lexicographic token order.
pub(crate) fn rank_order(a_score: f64, a_tokens: &[TokenId], b_score: f64, b_tokens: &[TokenId]) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_tokens.cmp(b_tokens))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortEvent {
    pub step: usize,
    pub candidates: usize,
}

/// Work done by one search.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Σ over executed steps of (alive hypotheses × V).
    pub expansions: u64,
    pub sort_events: Vec<SortEvent>,
}

impl SearchStats {
    pub fn max_sort(&self) -> usize {
        self.sort_events.iter().map(|e| e.candidates).max().unwrap_or(0)
    }

    pub fn absorb(&mut self, other: &SearchStats) {
        self.expansions += other.expansions;
        self.sort_events.extend_from_slice(&other.sort_events);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutput {
    pub selected: Hypothesis,
    /// Search beam in normalized-score order (ties lexicographic).
    pub beam: Vec<Hypothesis>,
    /// 1-based rank of `selected` in `beam`.
    pub selected_index: usize,
    pub stats: SearchStats,
}

impl DecodeOutput {
    pub fn expansions(&self) -> u64 {
        self.stats.expansions
    }
}

struct Candidate {
    parent: usize,
    token: TokenId,
    logprob: f64,
    score: f64,
}

/// Vanilla beam search.
///
/// Each step expands every alive hypothesis by all `V` tokens and ranks the
/// candidates by normalized score. Walking the ranking, finished candidates
/// go to the finished set (up to `B`) and unfinished ones fill the next alive
/// beam (up to `B`); candidates ranked after the `B`-th alive one are dropped.
/// Search stops once `B` hypotheses have finished or after `max_len` steps;
/// a short finished set is padded with the best unfinished hypotheses.
///
/// Tokens stay in the model's native order, so this also drives reverse models.
pub fn vbs_decode<M: LanguageModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    params: &SearchParams,
) -> Result<DecodeOutput> {
    params.validate()?;
    let vocab = model.vocab_size();
    if vocab < 2 {
        return Err(Error::InvalidParameter(
            "vocabulary must contain at least one token besides EOS".into(),
        ));
    }
    let beam_size = params.beam_size;
    let alpha = params.alpha;
    // lp(t) for every reachable length.
    let penalties: Vec<f64> = (1..=params.max_len)
        .map(|len| length_penalty(len, alpha))
        .collect::<Result<_>>()?;

    let mut stats = SearchStats::default();
    let mut alive = vec![Hypothesis {
        tokens: Vec::new(),
        logprob: 0.0,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for step in 1..=params.max_len {
        let lp = penalties[step - 1];
        let mut candidates = Vec::with_capacity(alive.len() * vocab);
        for (parent, hyp) in alive.iter().enumerate() {
            let logprobs = model.next_token_logprobs(source, &hyp.tokens)?;
            if logprobs.len() != vocab {
                return Err(Error::InvalidParameter(format!(
                    "model returned {} log-probabilities for a vocabulary of {vocab}",
                    logprobs.len()
                )));
            }
            for (w, token_lp) in logprobs.into_iter().enumerate() {
                let logprob = hyp.logprob + token_lp;
                candidates.push(Candidate {
                    parent,
                    token: TokenId(w as u32),
                    logprob,
                    score: logprob / lp,
                });
            }
        }
        stats.expansions += candidates.len() as u64;
        stats.sort_events.push(SortEvent {
            step,
            candidates: candidates.len(),
        });
        candidates.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then_with(|| {
                alive[a.parent]
                    .tokens
                    .cmp(&alive[b.parent].tokens)
                    .then(a.token.cmp(&b.token))
            })
        });

        let mut next_alive = Vec::with_capacity(beam_size);
        for cand in &candidates {
            if next_alive.len() == beam_size {
                break;
            }
            let is_eos = cand.token == TokenId::EOS;
            if is_eos && finished.len() == beam_size {
                continue;
            }
            let mut tokens = Vec::with_capacity(step);
            tokens.extend_from_slice(&alive[cand.parent].tokens);
            tokens.push(cand.token);
            let hyp = Hypothesis {
                tokens,
                logprob: cand.logprob,
                finished: is_eos,
            };
            if is_eos {
                finished.push(hyp);
            } else {
                next_alive.push(hyp);
            }
        }
        alive = next_alive;
        if finished.len() >= beam_size || alive.is_empty() {
            break;
        }
    }

    let by_rank = |a: &Hypothesis, b: &Hypothesis| {
        rank_order(
            a.normalized_score(alpha),
            &a.tokens,
            b.normalized_score(alpha),
            &b.tokens,
        )
    };
    let mut beam = finished;
    if beam.len() < beam_size {
        alive.sort_by(by_rank);
        let missing = beam_size - beam.len();
        beam.extend(alive.into_iter().take(missing));
    }
    beam.sort_by(by_rank);
    let selected = beam[0].clone();
    Ok(DecodeOutput {
        selected,
        beam,
        selected_index: 1,
        stats,
    })
}
