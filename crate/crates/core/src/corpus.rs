//! Tokenization, vocabulary, parallel-corpus ingestion and splitting.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a symbol in a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const SEP: TokenId = TokenId(2);
    pub const UNK: TokenId = TokenId(3);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_marker(self) -> bool {
        self == Self::BOS || self == Self::EOS || self == Self::SEP
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Surfaces of the reserved ids 0..4, in id order.
pub const RESERVED_SURFACES: [&str; 4] = ["<s>", "</s>", "<sep>", "<unk>"];

const PUNCTUATION: [char; 5] = ['.', '!', '?', ',', '\''];

/// Lowercases, splits on whitespace and detaches `. ! ? , '` as standalone tokens.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in line.split_whitespace() {
        let mut current = String::new();
        for ch in chunk.chars().flat_map(char::to_lowercase) {
            if PUNCTUATION.contains(&ch) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Element-wise reversal of a target sequence. Sources are never reversed.
pub fn reverse_target<T: Clone>(target: &[T]) -> Vec<T> {
    target.iter().rev().cloned().collect()
}

/// A tokenized but not yet indexed sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfacePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl SurfacePair {
    pub fn new(source: Vec<String>, target: Vec<String>) -> Self {
        Self { source, target }
    }

    pub fn from_text(source: &str, target: &str) -> Self {
        Self::new(tokenize(source), tokenize(target))
    }
}

/// An indexed sentence pair. Neither side is empty and neither contains BOS, EOS or SEP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    source: Vec<TokenId>,
    target: Vec<TokenId>,
}

impl SentencePair {
    pub fn new(source: Vec<TokenId>, target: Vec<TokenId>) -> Result<Self> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidSequence("sentence pair sides must be non-empty".into()));
        }
        if source.iter().chain(&target).any(|t| t.is_marker()) {
            return Err(Error::InvalidSequence(
                "sentence pair contains a BOS/EOS/SEP marker".into(),
            ));
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &[TokenId] {
        &self.source
    }

    pub fn target(&self) -> &[TokenId] {
        &self.target
    }
}

/// Bijective surface/id table with the reserved markers at ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::reserved_only()
    }
}

impl Vocabulary {
    pub fn reserved_only() -> Self {
        let mut vocab = Self {
            surfaces: Vec::new(),
            ids: HashMap::new(),
        };
        for surface in RESERVED_SURFACES {
            vocab.push(surface.to_string());
        }
        vocab
    }

    fn push(&mut self, surface: String) -> TokenId {
        let id = TokenId(self.surfaces.len() as u32);
        self.ids.insert(surface.clone(), id);
        self.surfaces.push(surface);
        id
    }

    /// Assigns ids by descending corpus frequency (ties lexicographic) to every
    /// surface seen at least `min_count` times; everything rarer maps to UNK.
    /// `usize::MAX` stands for an infinite threshold.
    pub fn build(pairs: &[SurfacePair], min_count: usize) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::InvalidParameter("min_count must be at least 1".into()));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidParameter(
                "cannot build a vocabulary from an empty corpus".into(),
            ));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for pair in pairs {
            for surface in pair.source.iter().chain(&pair.target) {
                if RESERVED_SURFACES.contains(&surface.as_str()) {
                    continue;
                }
                *counts.entry(surface.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut vocab = Self::reserved_only();
        for (surface, _) in kept {
            vocab.push(surface.to_string());
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    /// Always false: the reserved markers are present in every vocabulary.
    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Unknown surfaces and reserved marker spellings resolve to UNK.
    pub fn id(&self, surface: &str) -> TokenId {
        match self.ids.get(surface) {
            Some(&id) if !id.is_marker() => id,
            _ => TokenId::UNK,
        }
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id.index()).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, surfaces: &[S]) -> Vec<TokenId> {
        surfaces.iter().map(|s| self.id(s.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| self.surface(id).unwrap_or(RESERVED_SURFACES[3]).to_string())
            .collect()
    }

    pub fn encode_pair(&self, pair: &SurfacePair) -> Result<SentencePair> {
        SentencePair::new(self.encode(&pair.source), self.encode(&pair.target))
    }

    /// One `surface<TAB>id` line per entry, ids ascending.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (id, surface) in self.surfaces.iter().enumerate() {
            writeln!(out, "{surface}\t{id}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut vocab = Self {
            surfaces: Vec::new(),
            ids: HashMap::new(),
        };
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            let (surface, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "expected surface<TAB>id"))?;
            let id: u32 = id
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad id {id:?}")))?;
            if id as usize != vocab.surfaces.len() {
                return Err(Error::parse(origin, lineno, "ids must be consecutive from 0"));
            }
            if let Some(reserved) = RESERVED_SURFACES.get(idx) {
                if surface != *reserved {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("expected reserved marker {reserved}"),
                    ));
                }
            }
            if vocab.ids.contains_key(surface) {
                return Err(Error::parse(origin, lineno, "duplicate surface"));
            }
            vocab.push(surface.to_string());
        }
        if vocab.len() < RESERVED_SURFACES.len() {
            return Err(Error::parse(origin, vocab.len() + 1, "missing reserved markers"));
        }
        Ok(vocab)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Self::Tsv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::InvalidParameter(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tsv => "tsv",
            Self::Jsonl => "jsonl",
        })
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    source: String,
    target: String,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<SurfacePair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format, &path.display().to_string())
}

/// Parses a corpus stream; `origin` is used in error messages.
pub fn read_corpus<R: BufRead>(reader: R, format: CorpusFormat, origin: &str) -> Result<Vec<SurfacePair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let (source, target) = match format {
            CorpusFormat::Tsv => {
                let mut fields = line.split('\t');
                match (fields.next(), fields.next(), fields.next()) {
                    (Some(s), Some(t), None) => (s.to_string(), t.to_string()),
                    _ => {
                        return Err(Error::parse(
                            origin,
                            lineno,
                            "expected exactly one TAB separating source and target",
                        ))
                    }
                }
            }
            CorpusFormat::Jsonl => {
                let record: JsonRecord =
                    serde_json::from_str(&line).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
                (record.source, record.target)
            }
        };
        let pair = SurfacePair::from_text(&source, &target);
        if pair.source.is_empty() || pair.target.is_empty() {
            return Err(Error::parse(origin, lineno, "empty source or target"));
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(Error::parse(origin, 0, "corpus is empty"));
    }
    Ok(pairs)
}

/// Writes pairs as TSV with space-joined tokens; reading the file back yields the same tokens.
pub fn write_tsv<W: Write>(pairs: &[SurfacePair], mut out: W) -> std::io::Result<()> {
    for pair in pairs {
        writeln!(out, "{}\t{}", pair.source.join(" "), pair.target.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.97,
            validation: 0.01,
            test: 0.02,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidParameter("split fractions must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Disjoint, exhaustive train/validation/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit<P> {
    pub train: Vec<P>,
    pub validation: Vec<P>,
    pub test: Vec<P>,
    pub fractions: SplitFractions,
}

impl<P> CorpusSplit<P> {
    /// Shuffles with a seeded ChaCha stream, then cuts validation and test
    /// blocks of `round(n * fraction)` items; the remainder is training data.
    pub fn new(items: Vec<P>, fractions: SplitFractions, seed: u64) -> Result<Self> {
        fractions.validate()?;
        let n = items.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let n_validation = (((n as f64) * fractions.validation).round() as usize).min(n);
        let n_test = (((n as f64) * fractions.test).round() as usize).min(n - n_validation);

        let mut slots: Vec<Option<P>> = items.into_iter().map(Some).collect();
        let mut take =
            |idx: &[usize]| -> Vec<P> { idx.iter().map(|&i| slots[i].take().expect("index used once")).collect() };
        let validation = take(&order[..n_validation]);
        let test = take(&order[n_validation..n_validation + n_test]);
        let train = take(&order[n_validation + n_test..]);
        Ok(Self {
            train,
            validation,
            test,
            fractions,
        })
    }
}
