use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_ids, Direction, LanguageModel};
use crate::corpus::{reverse_target, SentencePair, TokenId};
use crate::error::{Error, Result};

const FORMAT_MAGIC: &str = "bidibeam-ngram";
const FORMAT_VERSION: u32 = 1;

/// Interpolation order, per-order weights and the additive constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramConfig {
    pub order: usize,
    pub weights: Vec<f64>,
    pub k: f64,
}

impl Default for NGramConfig {
    fn default() -> Self {
        Self {
            order: 3,
            weights: vec![0.2, 0.3, 0.5],
            k: 0.1,
        }
    }
}

impl NGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidParameter("n-gram order must be at least 1".into()));
        }
        if self.weights.len() != self.order {
            return Err(Error::InvalidParameter(format!(
                "{} interpolation weights given for order {}",
                self.weights.len(),
                self.order
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "interpolation weights must be non-negative".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "interpolation weights sum to {sum}, expected 1"
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidParameter("additive constant k must be positive".into()));
        }
        Ok(())
    }
}

/// Next-token counts observed after one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextCounts {
    pub total: u64,
    pub next: BTreeMap<TokenId, u64>,
}

/// Source-conditioned n-gram model over the stream `[BOS, source.., SEP, target'.., EOS]`.
///
/// The probability of `w` after a history is
/// `Σᵢ λᵢ · (countᵢ(ctx, w) + k) / (Σ countᵢ(ctx, ·) + k·V)` where `ctx` is the
/// last `i − 1` history tokens. Only positions after SEP are counted, so the
/// source acts purely as conditioning context.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalNGramLm {
    config: NGramConfig,
    direction: Direction,
    vocab_size: usize,
    tables: Vec<BTreeMap<Vec<TokenId>, ContextCounts>>,
}

impl ConditionalNGramLm {
    /// A model with empty count tables (uniform at order 1).
    pub fn untrained(config: NGramConfig, direction: Direction, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        if vocab_size < 4 {
            return Err(Error::InvalidParameter("vocabulary size must be at least 4".into()));
        }
        let tables = vec![BTreeMap::new(); config.order];
        Ok(Self {
            config,
            direction,
            vocab_size,
            tables,
        })
    }

    pub fn train(
        corpus: &[SentencePair],
        vocab_size: usize,
        direction: Direction,
        config: NGramConfig,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidParameter("training corpus is empty".into()));
        }
        let mut model = Self::untrained(config, direction, vocab_size)?;
        let mut stream = Vec::new();
        for pair in corpus {
            check_ids(pair.source(), vocab_size)?;
            check_ids(pair.target(), vocab_size)?;
            stream.clear();
            stream.push(TokenId::BOS);
            stream.extend_from_slice(pair.source());
            stream.push(TokenId::SEP);
            let first_predicted = stream.len();
            match direction {
                Direction::Regular => stream.extend_from_slice(pair.target()),
                Direction::Reverse => stream.extend(reverse_target(pair.target())),
            }
            stream.push(TokenId::EOS);
            for pos in first_predicted..stream.len() {
                for (i, table) in model.tables.iter_mut().enumerate() {
                    let ctx = &stream[pos.saturating_sub(i)..pos];
                    let entry = table.entry(ctx.to_vec()).or_default();
                    entry.total += 1;
                    *entry.next.entry(stream[pos]).or_default() += 1;
                }
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &NGramConfig {
        &self.config
    }

    /// Count table for contexts of length `order - 1`; `order` is 1-based.
    pub fn table(&self, order: usize) -> &BTreeMap<Vec<TokenId>, ContextCounts> {
        &self.tables[order - 1]
    }

    fn contexts(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<Vec<Option<&ContextCounts>>> {
        check_ids(source, self.vocab_size)?;
        check_ids(prefix, self.vocab_size)?;
        if prefix.contains(&TokenId::EOS) {
            return Err(Error::InvalidSequence("prefix must not contain EOS".into()));
        }
        let mut history = Vec::with_capacity(source.len() + prefix.len() + 2);
        history.push(TokenId::BOS);
        history.extend_from_slice(source);
        history.push(TokenId::SEP);
        history.extend_from_slice(prefix);
        let end = history.len();
        Ok(self
            .tables
            .iter()
            .enumerate()
            .map(|(i, table)| table.get(&history[end.saturating_sub(i)..end]))
            .collect())
    }

    fn probability(&self, contexts: &[Option<&ContextCounts>], token: TokenId) -> f64 {
        let k = self.config.k;
        let v = self.vocab_size as f64;
        let mut p = 0.0;
        for (weight, ctx) in self.config.weights.iter().zip(contexts) {
            let (count, total) = match ctx {
                Some(c) => (c.next.get(&token).copied().unwrap_or(0), c.total),
                None => (0, 0),
            };
            p += weight * (count as f64 + k) / (total as f64 + k * v);
        }
        p
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "order\t{}", self.config.order)?;
        writeln!(out, "direction\t{}", self.direction)?;
        writeln!(out, "vocab\t{}", self.vocab_size)?;
        let weights: Vec<String> = self.config.weights.iter().map(f64::to_string).collect();
        writeln!(out, "weights\t{}", weights.join(" "))?;
        writeln!(out, "k\t{}", self.config.k)?;
        for (i, table) in self.tables.iter().enumerate() {
            writeln!(out, "table\t{}\t{}", i + 1, table.len())?;
            for (ctx, counts) in table {
                let ctx: Vec<String> = ctx.iter().map(|t| t.0.to_string()).collect();
                let next: Vec<String> = counts.next.iter().map(|(t, c)| format!("{}:{c}", t.0)).collect();
                writeln!(out, "{}\t{}\t{}", ctx.join(" "), counts.total, next.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, expected_vocab_size: usize) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), expected_vocab_size, &path.display().to_string())
    }

    /// Parses the text dump written by [`write_to`](Self::write_to). A vocabulary
    /// size different from `expected_vocab_size` is an error.
    pub fn read_from<R: BufRead>(reader: R, expected_vocab_size: usize, origin: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| {
            l.map(|l| (i + 1, l))
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))
        });
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            lines.next().unwrap_or_else(|| {
                Err(Error::parse(
                    origin,
                    0,
                    format!("unexpected end of file, expected {what}"),
                ))
            })
        };

        let (n, magic) = next_line("header")?;
        if magic != format!("{FORMAT_MAGIC} {FORMAT_VERSION}") {
            return Err(Error::parse(origin, n, format!("unsupported model header {magic:?}")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next_line(key)?;
            match line.split_once('\t') {
                Some((k, v)) if k == key => Ok((n, v.to_string())),
                _ => Err(Error::parse(origin, n, format!("expected {key} field"))),
            }
        };
        let bad = |n: usize, what: &str| Error::parse(origin, n, format!("invalid {what}"));

        let (n, order) = field("order")?;
        let order: usize = order.parse().map_err(|_| bad(n, "order"))?;
        let (n, direction) = field("direction")?;
        let direction: Direction = direction.parse().map_err(|_| bad(n, "direction"))?;
        let (n, vocab) = field("vocab")?;
        let vocab_size: usize = vocab.parse().map_err(|_| bad(n, "vocabulary size"))?;
        if vocab_size != expected_vocab_size {
            return Err(Error::parse(
                origin,
                n,
                format!("model vocabulary size {vocab_size} does not match vocabulary of size {expected_vocab_size}"),
            ));
        }
        let (n, weights) = field("weights")?;
        let weights = weights
            .split(' ')
            .map(str::parse)
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| bad(n, "weights"))?;
        let (n, k) = field("k")?;
        let k: f64 = k.parse().map_err(|_| bad(n, "k"))?;

        let mut model = Self::untrained(NGramConfig { order, weights, k }, direction, vocab_size)
            .map_err(|e| Error::parse(origin, n, e.to_string()))?;

        let parse_id = |s: &str, n: usize| -> Result<TokenId> {
            let id = TokenId(s.parse().map_err(|_| bad(n, "token id"))?);
            check_ids(&[id], vocab_size).map_err(|e| Error::parse(origin, n, e.to_string()))?;
            Ok(id)
        };
        for i in 0..order {
            let (n, header) = next_line("table header")?;
            let parts: Vec<&str> = header.split('\t').collect();
            if parts.len() != 3 || parts[0] != "table" || parts[1] != (i + 1).to_string() {
                return Err(bad(n, "table header"));
            }
            let entries: usize = parts[2].parse().map_err(|_| bad(n, "table size"))?;
            for _ in 0..entries {
                let (n, line) = next_line("table entry")?;
                let parts: Vec<&str> = line.split('\t').collect();
                if parts.len() != 3 {
                    return Err(bad(n, "table entry"));
                }
                let ctx = parts[0]
                    .split(' ')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_id(s, n))
                    .collect::<Result<Vec<_>>>()?;
                if ctx.len() > i {
                    return Err(bad(n, "context length"));
                }
                let total: u64 = parts[1].parse().map_err(|_| bad(n, "total"))?;
                let mut counts = ContextCounts::default();
                for item in parts[2].split(' ').filter(|s| !s.is_empty()) {
                    let (id, c) = item.split_once(':').ok_or_else(|| bad(n, "count"))?;
                    let c: u64 = c.parse().map_err(|_| bad(n, "count"))?;
                    counts.next.insert(parse_id(id, n)?, c);
                    counts.total += c;
                }
                if counts.total != total {
                    return Err(Error::parse(origin, n, "context total does not match its counts"));
                }
                model.tables[i].insert(ctx, counts);
            }
        }
        if let Some(extra) = lines.next() {
            let (n, _) = extra?;
            return Err(Error::parse(origin, n, "trailing data after count tables"));
        }
        Ok(model)
    }
}

impl LanguageModel for ConditionalNGramLm {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn next_token_logprobs(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<Vec<f64>> {
        let contexts = self.contexts(source, prefix)?;
        Ok((0..self.vocab_size as u32)
            .map(|w| self.probability(&contexts, TokenId(w)).ln())
            .collect())
    }

    fn token_logprob(&self, source: &[TokenId], prefix: &[TokenId], token: TokenId) -> Result<f64> {
        check_ids(&[token], self.vocab_size)?;
        let contexts = self.contexts(source, prefix)?;
        Ok(self.probability(&contexts, token).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: TokenId = TokenId(4);
    const A: TokenId = TokenId(5);
    const B: TokenId = TokenId(6);

    fn unigram() -> NGramConfig {
        NGramConfig {
            order: 1,
            weights: vec![1.0],
            k: 1.0,
        }
    }

    fn pair(src: &[TokenId], tgt: &[TokenId]) -> SentencePair {
        SentencePair::new(src.to_vec(), tgt.to_vec()).unwrap()
    }

    #[test]
    fn unigram_counts_cover_target_and_eos_only() {
        let corpus = [pair(&[Q], &[A])];
        let regular = ConditionalNGramLm::train(&corpus, 6, Direction::Regular, unigram()).unwrap();
        let unigrams = &regular.table(1)[&Vec::new()];
        assert_eq!(unigrams.total, 2);
        assert_eq!(unigrams.next.get(&A), Some(&1));
        assert_eq!(unigrams.next.get(&TokenId::EOS), Some(&1));
        assert_eq!(unigrams.next.get(&Q), None);

        let reverse = ConditionalNGramLm::train(&corpus, 6, Direction::Reverse, unigram()).unwrap();
        assert_eq!(reverse.tables, regular.tables);
    }

    #[test]
    fn reverse_training_predicts_reversed_target() {
        let config = NGramConfig {
            order: 2,
            weights: vec![0.5, 0.5],
            k: 1.0,
        };
        let corpus = [pair(&[Q], &[A, B])];
        let model = ConditionalNGramLm::train(&corpus, 7, Direction::Reverse, config).unwrap();
        let bigrams = model.table(2);
        // Stream: BOS q SEP b a EOS
        assert_eq!(bigrams[&vec![TokenId::SEP]].next.get(&B), Some(&1));
        assert_eq!(bigrams[&vec![B]].next.get(&A), Some(&1));
        assert_eq!(bigrams[&vec![A]].next.get(&TokenId::EOS), Some(&1));
        assert_eq!(bigrams.len(), 3);
    }

    #[test]
    fn hand_evaluated_probabilities() {
        let corpus = [pair(&[Q], &[A])];
        let model = ConditionalNGramLm::train(&corpus, 6, Direction::Regular, unigram()).unwrap();
        let lp = model.next_token_logprobs(&[Q], &[]).unwrap();
        assert!((lp[A.index()].exp() - 0.25).abs() < 1e-15);
        let seq = model.sequence_logprob(&[Q], &[A, TokenId::EOS]).unwrap();
        assert!((seq - 2.0 * 0.25f64.ln()).abs() < 1e-12);
        assert!((seq - (-2.772588722239781)).abs() < 1e-12);
    }

    #[test]
    fn untrained_is_uniform() {
        let model = ConditionalNGramLm::untrained(unigram(), Direction::Regular, 9).unwrap();
        for lp in model.next_token_logprobs(&[Q], &[A]).unwrap() {
            assert!((lp - (1.0f64 / 9.0).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn parameter_errors() {
        let corpus = [pair(&[Q], &[A])];
        let bad_sum = NGramConfig {
            order: 2,
            weights: vec![0.5, 0.6],
            k: 0.1,
        };
        assert!(matches!(
            ConditionalNGramLm::train(&corpus, 6, Direction::Regular, bad_sum),
            Err(Error::InvalidParameter(_))
        ));
        let bad_len = NGramConfig {
            order: 3,
            weights: vec![1.0],
            k: 0.1,
        };
        assert!(ConditionalNGramLm::train(&corpus, 6, Direction::Regular, bad_len).is_err());
        let bad_k = NGramConfig { k: 0.0, ..unigram() };
        assert!(ConditionalNGramLm::train(&corpus, 6, Direction::Regular, bad_k).is_err());
        assert!(ConditionalNGramLm::train(&[], 6, Direction::Regular, unigram()).is_err());
    }

    #[test]
    fn query_errors() {
        let corpus = [pair(&[Q], &[A])];
        let model = ConditionalNGramLm::train(&corpus, 6, Direction::Regular, unigram()).unwrap();
        assert!(matches!(
            model.next_token_logprobs(&[TokenId(6)], &[]),
            Err(Error::VocabularyMismatch { id: 6, size: 6 })
        ));
        assert!(model.next_token_logprobs(&[Q], &[TokenId::EOS]).is_err());
        assert!(model.sequence_logprob(&[Q], &[A]).is_err());
        assert!(model.sequence_logprob(&[Q], &[TokenId::EOS, A, TokenId::EOS]).is_err());
        assert!(matches!(
            model.reverse_sequence_logprob(&[Q], &[A]),
            Err(Error::Direction { .. })
        ));
    }

    #[test]
    fn reverse_sequence_logprob_matches_manual_pipeline() {
        let corpus = [pair(&[Q], &[A, B]), pair(&[Q], &[B, B, A])];
        let model = ConditionalNGramLm::train(&corpus, 7, Direction::Reverse, NGramConfig::default()).unwrap();
        let direct = model.reverse_sequence_logprob(&[Q], &[A, B]).unwrap();
        let manual = model.sequence_logprob(&[Q], &[B, A, TokenId::EOS]).unwrap();
        assert_eq!(direct.to_bits(), manual.to_bits());

        let single = model.reverse_sequence_logprob(&[Q], &[A]).unwrap();
        assert_eq!(
            single.to_bits(),
            model.sequence_logprob(&[Q], &[A, TokenId::EOS]).unwrap().to_bits()
        );
    }

    #[test]
    fn file_round_trip_is_exact() {
        let corpus = [pair(&[Q, A], &[A, B, A]), pair(&[B], &[Q])];
        let config = NGramConfig {
            order: 3,
            weights: vec![0.1, 0.2, 0.7],
            k: 0.03,
        };
        let model = ConditionalNGramLm::train(&corpus, 7, Direction::Reverse, config).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = ConditionalNGramLm::read_from(&buf[..], 7, "mem").unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);

        let err = ConditionalNGramLm::read_from(&buf[..], 8, "model.lm").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }
}
