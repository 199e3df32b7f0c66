//! Bidirectional re-scoring (BidiS) and bidirectional agreement (BidiA).

use std::cmp::Ordering;

use serde::Serialize;

use crate::beam::{length_penalty, vbs_decode, DecodeOutput, Hypothesis, SearchParams, SearchStats};
use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::lm::{Direction, LanguageModel};
use crate::similarity::{Dissimilarity, SimilaritySpec};

/// Weight of the reverse term when no validated value is available.
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BidisParams {
    pub lambda: f64,
    pub search: SearchParams,
}

impl BidisParams {
    pub fn new(lambda: f64, search: SearchParams) -> Self {
        Self { lambda, search }
    }
}

fn check_pair<R, S>(regular: &R, reverse: &S) -> Result<()>
where
    R: LanguageModel + ?Sized,
    S: LanguageModel + ?Sized,
{
    for (model, expected) in [
        (regular.direction(), Direction::Regular),
        (reverse.direction(), Direction::Reverse),
    ] {
        if model != expected {
            return Err(Error::Direction { expected, found: model });
        }
    }
    if regular.vocab_size() != reverse.vocab_size() {
        return Err(Error::InvalidParameter(format!(
            "regular and reverse vocabularies differ ({} vs {})",
            regular.vocab_size(),
            reverse.vocab_size()
        )));
    }
    Ok(())
}

/// One regular-beam candidate after bidirectional re-scoring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescoredCandidate {
    /// 1-based rank in the regular beam.
    pub vbs_rank: usize,
    pub hypothesis: Hypothesis,
    /// `log P(Y⁺|X) / lp(Y)` under the regular model.
    pub regular_term: f64,
    /// `log P(Y⁻|X) / lp(Y)` under the reverse model.
    pub reverse_term: f64,
    /// `regular_term + λ · reverse_term`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidisOutput {
    /// `beam` is the regular beam; `selected_index` is the winner's rank there.
    pub decode: DecodeOutput,
    pub lambda: f64,
    /// Candidates by descending re-score, ties by regular rank.
    pub rescored: Vec<RescoredCandidate>,
}

impl BidisOutput {
    /// Reverse-model sequence scorings performed (one per beam candidate).
    pub fn rescoring_evals(&self) -> usize {
        self.rescored.len()
    }
}

/// Re-ranks the regular beam by `log P(Y⁺|X)/lp + λ · log P(Y⁻|X)/lp`.
pub fn bidis_decode<R, S>(regular: &R, reverse: &S, source: &[TokenId], params: &BidisParams) -> Result<BidisOutput>
where
    R: LanguageModel + ?Sized,
    S: LanguageModel + ?Sized,
{
    check_pair(regular, reverse)?;
    if !(params.lambda.is_finite() && params.lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a non-negative number, got {}",
            params.lambda
        )));
    }
    let vbs = vbs_decode(regular, source, &params.search)?;
    let mut rescored = vbs
        .beam
        .iter()
        .enumerate()
        .map(|(idx, hyp)| {
            let lp = length_penalty(hyp.len(), params.search.alpha)?;
            let regular_term = regular.prefix_logprob(source, &hyp.tokens)? / lp;
            let reverse_term = reverse.reverse_sequence_logprob(source, hyp.content())? / lp;
            Ok(RescoredCandidate {
                vbs_rank: idx + 1,
                hypothesis: hyp.clone(),
                regular_term,
                reverse_term,
                score: regular_term + params.lambda * reverse_term,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rescored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.vbs_rank.cmp(&b.vbs_rank)));

    let winner = &rescored[0];
    let decode = DecodeOutput {
        selected: winner.hypothesis.clone(),
        selected_index: winner.vbs_rank,
        beam: vbs.beam,
        stats: vbs.stats,
    };
    Ok(BidisOutput {
        decode,
        lambda: params.lambda,
        rescored,
    })
}

/// The closest (regular, reverse) pair found by agreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementPair {
    pub regular_hypothesis: Hypothesis,
    /// Reverse-model hypothesis brought back into regular order.
    pub reverse_hypothesis_regular_order: Hypothesis,
    #[serde(serialize_with = "serialize_dissimilarity")]
    pub dissimilarity: Dissimilarity,
    /// 1-based rank in the regular half-beam.
    pub regular_index: usize,
    /// 1-based rank in the reverse half-beam.
    pub reverse_index: usize,
}

fn serialize_dissimilarity<S: serde::Serializer>(d: &Dissimilarity, s: S) -> std::result::Result<S::Ok, S::Error> {
    match d.value() {
        Some(v) => s.serialize_some(&v),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidiaOutput {
    /// `beam` is the regular half-beam S; `stats` sums both searches.
    pub decode: DecodeOutput,
    /// Reverse half-beam S′ in regular order, same ranking as the reverse search.
    pub reverse_beam: Vec<Hypothesis>,
    pub chosen: AgreementPair,
    pub pairwise_evals: usize,
    pub regular_stats: SearchStats,
    pub reverse_stats: SearchStats,
}

/// Least dissimilar pair over `regular × reverse` (reverse already in regular
/// order) and the number of dissimilarities evaluated.
///
/// Ties go to the higher regular normalized score, then the lower regular
/// rank, then the lower reverse rank.
pub fn agreement_argmin(
    regular: &[Hypothesis],
    reverse: &[Hypothesis],
    alpha: f64,
    measure: &SimilaritySpec,
) -> Result<(AgreementPair, usize)> {
    if regular.is_empty() || reverse.is_empty() {
        return Err(Error::InvalidParameter("agreement needs two non-empty beams".into()));
    }
    let mut best: Option<(Dissimilarity, f64, usize, usize)> = None;
    let mut evals = 0;
    for (i, y_n) in regular.iter().enumerate() {
        let score = y_n.normalized_score(alpha);
        for (j, y_r) in reverse.iter().enumerate() {
            let d = measure.dissimilarity(y_n.content(), y_r.content())?;
            evals += 1;
            let better = match &best {
                None => true,
                Some((bd, bs, bi, bj)) => {
                    d.cmp(bd)
                        .then_with(|| bs.total_cmp(&score))
                        .then(i.cmp(bi))
                        .then(j.cmp(bj))
                        == Ordering::Less
                }
            };
            if better {
                best = Some((d, score, i, j));
            }
        }
    }
    let (dissimilarity, _, i, j) = best.expect("both beams are non-empty");
    Ok((
        AgreementPair {
            regular_hypothesis: regular[i].clone(),
            reverse_hypothesis_regular_order: reverse[j].clone(),
            dissimilarity,
            regular_index: i + 1,
            reverse_index: j + 1,
        },
        evals,
    ))
}

/// Runs two half-width searches and returns the regular member of the least
/// dissimilar (regular, reverse) pair; see [`agreement_argmin`].
pub fn bidia_decode<R, S>(
    regular: &R,
    reverse: &S,
    source: &[TokenId],
    params: &SearchParams,
    measure: &SimilaritySpec,
) -> Result<BidiaOutput>
where
    R: LanguageModel + ?Sized,
    S: LanguageModel + ?Sized,
{
    params.validate()?;
    if params.beam_size < 2 || !params.beam_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "agreement needs an even beam size of at least 2, got {}",
            params.beam_size
        )));
    }
    measure.validate()?;
    check_pair(regular, reverse)?;

    let half = SearchParams {
        beam_size: params.beam_size / 2,
        ..*params
    };
    let forward = vbs_decode(regular, source, &half)?;
    let backward = vbs_decode(reverse, source, &half)?;
    let reverse_beam: Vec<Hypothesis> = backward.beam.iter().map(Hypothesis::unreversed).collect();

    let (chosen, pairwise_evals) = agreement_argmin(&forward.beam, &reverse_beam, params.alpha, measure)?;
    let i = chosen.regular_index - 1;

    let mut stats = forward.stats.clone();
    stats.absorb(&backward.stats);
    Ok(BidiaOutput {
        decode: DecodeOutput {
            selected: forward.beam[i].clone(),
            beam: forward.beam,
            selected_index: i + 1,
            stats,
        },
        reverse_beam,
        chosen,
        pairwise_evals,
        regular_stats: forward.stats,
        reverse_stats: backward.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::RandomLm;

    const SRC: [TokenId; 2] = [TokenId(4), TokenId(5)];

    fn models(seed: u64) -> (RandomLm, RandomLm) {
        (
            RandomLm::new(7, Direction::Regular, seed),
            RandomLm::new(7, Direction::Reverse, seed + 1000),
        )
    }

    #[test]
    fn bidis_lambda_zero_matches_vbs() {
        for seed in 0..20 {
            let (fwd, bwd) = models(seed);
            let search = SearchParams::new(4, 5);
            let vbs = vbs_decode(&fwd, &SRC, &search).unwrap();
            let out = bidis_decode(&fwd, &bwd, &SRC, &BidisParams::new(0.0, search)).unwrap();
            assert_eq!(out.decode.selected, vbs.selected);
            assert_eq!(out.decode.selected_index, 1);
            assert_eq!(out.rescoring_evals(), vbs.beam.len());
        }
    }

    #[test]
    fn bidis_singleton_beam() {
        let (fwd, bwd) = models(3);
        let search = SearchParams::new(1, 6);
        let vbs = vbs_decode(&fwd, &SRC, &search).unwrap();
        for lambda in [0.0, 0.5, 4.0, 100.0] {
            let out = bidis_decode(&fwd, &bwd, &SRC, &BidisParams::new(lambda, search)).unwrap();
            assert_eq!(out.decode.selected, vbs.selected);
        }
    }

    #[test]
    fn bidis_direction_errors() {
        let (fwd, bwd) = models(1);
        let p = BidisParams::new(1.0, SearchParams::new(2, 3));
        assert!(matches!(
            bidis_decode(&bwd, &fwd, &SRC, &p),
            Err(Error::Direction { .. })
        ));
        assert!(matches!(
            bidis_decode(&fwd, &fwd, &SRC, &p),
            Err(Error::Direction { .. })
        ));
        let bad = BidisParams::new(-1.0, SearchParams::new(2, 3));
        assert!(bidis_decode(&fwd, &bwd, &SRC, &bad).is_err());
    }

    #[test]
    fn bidia_beam_size_errors() {
        let (fwd, bwd) = models(1);
        let spec = SimilaritySpec::bleu_t(5);
        for b in [1, 3, 5] {
            assert!(matches!(
                bidia_decode(&fwd, &bwd, &SRC, &SearchParams::new(b, 5), &spec),
                Err(Error::InvalidParameter(_))
            ));
        }
        assert!(bidia_decode(&bwd, &fwd, &SRC, &SearchParams::new(2, 5), &spec).is_err());
    }

    #[test]
    fn bidia_two_gives_the_only_regular_hypothesis() {
        for seed in 0..10 {
            let (fwd, bwd) = models(seed);
            let params = SearchParams::new(2, 5);
            let out = bidia_decode(&fwd, &bwd, &SRC, &params, &SimilaritySpec::bleu_t(5)).unwrap();
            let single = vbs_decode(&fwd, &SRC, &SearchParams::new(1, 5)).unwrap();
            assert_eq!(out.decode.selected, single.selected);
            assert_eq!(out.pairwise_evals, 1);
            assert_eq!(
                out.decode.expansions(),
                out.regular_stats.expansions + out.reverse_stats.expansions
            );
        }
    }

    fn hyp(ids: &[u32], logprob: f64) -> Hypothesis {
        let mut tokens: Vec<TokenId> = ids.iter().map(|&i| TokenId(i)).collect();
        tokens.push(TokenId::EOS);
        Hypothesis {
            tokens,
            logprob,
            finished: true,
        }
    }

    #[test]
    fn identical_beams_pick_a_self_pair() {
        // No candidate's n-grams are all contained in another, so every
        // cross pair scores strictly below the self pair of the same length.
        let beam = vec![hyp(&[4, 5, 6], -1.0), hyp(&[7, 8], -1.5), hyp(&[9, 4, 8, 5], -2.0)];
        let spec = SimilaritySpec::bleu_t(4);
        let (pair, evals) = agreement_argmin(&beam, &beam, 0.6, &spec).unwrap();
        assert_eq!(evals, 9);
        assert_eq!(pair.regular_index, pair.reverse_index);
        assert_eq!(pair.regular_hypothesis, pair.reverse_hypothesis_regular_order);
        // The longest candidate has the mildest brevity penalty.
        assert_eq!(pair.regular_index, 3);
        assert_eq!(pair.dissimilarity, Dissimilarity::Finite(0.0));
    }

    #[test]
    fn tie_break_prefers_higher_regular_score() {
        // All pairs degenerate: the tie-break alone decides.
        let regular = vec![hyp(&[], -2.0), hyp(&[], -1.0)];
        let reverse = vec![hyp(&[], -3.0), hyp(&[], -0.5)];
        let (pair, _) = agreement_argmin(&regular, &reverse, 0.6, &SimilaritySpec::bleu_t(4)).unwrap();
        assert_eq!(pair.dissimilarity, Dissimilarity::Degenerate);
        assert_eq!((pair.regular_index, pair.reverse_index), (2, 1));
    }
}
