//! Bidirectional beam search decoding.
//!
//! Three decoders share one search core: vanilla beam search with GNMT length
//! normalization ([`beam::vbs_decode`]), bidirectional re-scoring of the
//! regular beam with a right-to-left model ([`bidi::bidis_decode`]), and
//! bidirectional agreement between a regular and a reverse half-beam
//! ([`bidi::bidia_decode`]). Models plug in through [`lm::LanguageModel`];
//! a source-conditioned interpolated n-gram model is provided.

pub mod beam;
pub mod bidi;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod instrumentation;
pub mod lm;
pub mod similarity;
pub mod synthetic;
pub mod toy;

pub use beam::{vbs_decode, DecodeOutput, Hypothesis, SearchParams, SearchStats};
pub use bidi::{bidia_decode, bidis_decode, BidiaOutput, BidisOutput, BidisParams};
pub use corpus::{SentencePair, SurfacePair, TokenId, Vocabulary};
pub use error::{Error, Result};
pub use lm::{ConditionalNGramLm, Direction, LanguageModel, NGramConfig};
pub use similarity::{Dissimilarity, SimilaritySpec};
