//! Sentence-pair measures used by bidirectional agreement.
//!
//! Both measures are expressed as a dissimilarity `d` that the agreement
//! search minimizes: `d = 1 − BLEU_T` for the BLEU variant, and WMD combined
//! with the max-length brevity penalty for the transport variant.

mod bleu;
mod embeddings;
mod transport;
mod wmd;

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};

pub use bleu::{clipped_matches, smoothed_bleu};
pub use embeddings::{EmbeddingTable, StopWords};
pub use transport::{solve_transport, TransportProblem, TransportSolution};
pub use wmd::{wmd, wmd_report, WmdReport};

/// Brevity penalty against the maximum length: `min(1, exp(1 − T/c))`.
pub fn bp_t(candidate_len: usize, max_len: usize) -> Result<f64> {
    if candidate_len < 1 {
        return Err(Error::InvalidParameter(
            "brevity penalty needs a non-empty candidate".into(),
        ));
    }
    Ok((1.0 - max_len as f64 / candidate_len as f64).exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    BleuT,
    WmdT,
}

/// How the brevity penalty enters the WMD dissimilarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BpMode {
    /// `wmd / BP_T`: short candidates look less similar.
    #[default]
    Divide,
    /// `wmd · BP_T`.
    Multiply,
}

impl FromStr for BpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "divide" => Ok(Self::Divide),
            "multiply" => Ok(Self::Multiply),
            other => Err(Error::InvalidParameter(format!("unknown bp mode {other:?}"))),
        }
    }
}

impl fmt::Display for BpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Divide => "divide",
            Self::Multiply => "multiply",
        })
    }
}

/// What WMD needs beyond token ids.
#[derive(Debug, Clone)]
pub struct WmdResources {
    pub table: Arc<EmbeddingTable>,
    pub stopwords: Arc<StopWords>,
    pub vocabulary: Arc<Vocabulary>,
}

#[derive(Debug, Clone)]
pub struct SimilaritySpec {
    pub kind: MeasureKind,
    /// `T` in the brevity penalty.
    pub max_len: usize,
    /// n-gram weights for orders `1..=weights.len()`.
    pub weights: Vec<f64>,
    pub bp_mode: BpMode,
    pub wmd: Option<WmdResources>,
}

impl SimilaritySpec {
    pub fn bleu_t(max_len: usize) -> Self {
        Self {
            kind: MeasureKind::BleuT,
            max_len,
            weights: vec![0.25; 4],
            bp_mode: BpMode::Divide,
            wmd: None,
        }
    }

    pub fn wmd_t(max_len: usize, resources: WmdResources) -> Self {
        Self {
            kind: MeasureKind::WmdT,
            wmd: Some(resources),
            ..Self::bleu_t(max_len)
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_bp_mode(mut self, mode: BpMode) -> Self {
        self.bp_mode = mode;
        self
    }

    pub fn max_order(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len < 1 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if self.weights.is_empty() {
            return Err(Error::InvalidParameter("need at least one n-gram order".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParameter("n-gram weights must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "n-gram weights sum to {sum}, expected 1"
            )));
        }
        if self.kind == MeasureKind::WmdT && self.wmd.is_none() {
            return Err(Error::InvalidParameter("WMD measure needs embeddings".into()));
        }
        Ok(())
    }

    /// Dissimilarity of a regular-model candidate `y_n` and an un-reversed
    /// reverse-model candidate `y_r`, both EOS-stripped. Empty sides and WMD
    /// pairs with nothing left after filtering are [`Dissimilarity::Degenerate`].
    pub fn dissimilarity(&self, y_n: &[TokenId], y_r: &[TokenId]) -> Result<Dissimilarity> {
        if y_n.is_empty() || y_r.is_empty() {
            return Ok(Dissimilarity::Degenerate);
        }
        match self.kind {
            MeasureKind::BleuT => Ok(Dissimilarity::Finite(1.0 - bleu_t(y_n, y_r, self)?)),
            MeasureKind::WmdT => {
                let res = self
                    .wmd
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("WMD measure needs embeddings".into()))?;
                let left = res.vocabulary.decode(y_n);
                let right = res.vocabulary.decode(y_r);
                match wmd(&left, &right, &res.table, &res.stopwords) {
                    Ok(distance) => {
                        let bp = bp_t(y_n.len(), self.max_len)?;
                        Ok(Dissimilarity::Finite(match self.bp_mode {
                            BpMode::Divide => distance / bp,
                            BpMode::Multiply => distance * bp,
                        }))
                    }
                    Err(Error::DegeneratePair) => Ok(Dissimilarity::Degenerate),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// `BP_T(|hypothesis|, T) · exp(Σ wₙ log pₙ)` with add-one smoothing for n ≥ 2
/// whenever some order has no match. The hypothesis length drives the penalty.
pub fn bleu_t<T: Eq + Hash>(hypothesis: &[T], reference: &[T], spec: &SimilaritySpec) -> Result<f64> {
    if hypothesis.is_empty() || reference.is_empty() {
        return Err(Error::InvalidSequence("BLEU_T needs non-empty sequences".into()));
    }
    let bp = bp_t(hypothesis.len(), spec.max_len)?;
    Ok(smoothed_bleu(hypothesis, reference, &spec.weights, bp))
}

/// Pair dissimilarity; degenerate pairs order after every finite value.
#[derive(Debug, Clone, Copy)]
pub enum Dissimilarity {
    Finite(f64),
    Degenerate,
}

impl Dissimilarity {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(d) => Some(d),
            Self::Degenerate => None,
        }
    }
}

impl Ord for Dissimilarity {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.total_cmp(b),
            (Self::Finite(_), Self::Degenerate) => Ordering::Less,
            (Self::Degenerate, Self::Finite(_)) => Ordering::Greater,
            (Self::Degenerate, Self::Degenerate) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Dissimilarity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Dissimilarity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dissimilarity {}

impl fmt::Display for Dissimilarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(d) => write!(f, "{d}"),
            Self::Degenerate => f.write_str("degenerate"),
        }
    }
}
