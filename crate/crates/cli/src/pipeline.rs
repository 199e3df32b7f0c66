//! Model loading and batch decoding shared by the commands.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bidibeam::bidi::DEFAULT_LAMBDA;
use bidibeam::corpus::{load_corpus, CorpusFormat, SurfacePair};
use bidibeam::eval::corpus_bleu4;
use bidibeam::instrumentation::ComplexityReport;
use bidibeam::similarity::{EmbeddingTable, StopWords, WmdResources};
use bidibeam::{
    bidia_decode, bidis_decode, vbs_decode, BidisParams, ConditionalNGramLm, Hypothesis, SearchParams, SimilaritySpec,
    TokenId, Vocabulary,
};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{AlgorithmChoice, RunConfig};
use crate::error::CliError;

pub const VOCAB_FILE: &str = "vocab.txt";
pub const REGULAR_MODEL_FILE: &str = "regular.lm";
pub const REVERSE_MODEL_FILE: &str = "reverse.lm";
pub const TRAIN_SPLIT: &str = "train.tsv";
pub const VALIDATION_SPLIT: &str = "validation.tsv";
pub const TEST_SPLIT: &str = "test.tsv";

pub struct Models {
    pub vocab: Arc<Vocabulary>,
    pub regular: ConditionalNGramLm,
    pub reverse: ConditionalNGramLm,
}

impl Models {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let vocab = Vocabulary::load(&dir.join(VOCAB_FILE))?;
        let regular = ConditionalNGramLm::load(&dir.join(REGULAR_MODEL_FILE), vocab.len())?;
        let reverse = ConditionalNGramLm::load(&dir.join(REVERSE_MODEL_FILE), vocab.len())?;
        Ok(Self {
            vocab: Arc::new(vocab),
            regular,
            reverse,
        })
    }
}

pub fn load_split(dir: &Path, name: &str) -> Result<Vec<SurfacePair>, CliError> {
    Ok(load_corpus(&dir.join(name), CorpusFormat::Tsv)?)
}

pub fn thread_pool(jobs: usize) -> Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Rejects algorithm and beam-size combinations that cannot run.
pub fn check_plan(config: &RunConfig, algorithms: &[AlgorithmChoice], beam_sizes: &[usize]) -> Result<(), CliError> {
    for &algorithm in algorithms {
        if algorithm.is_agreement() {
            if let Some(b) = beam_sizes.iter().find(|&&b| b < 2 || b % 2 != 0) {
                return Err(CliError::Config(format!(
                    "{algorithm} needs even beam sizes of at least 2, got {b}"
                )));
            }
        }
        if algorithm == AlgorithmChoice::BidiaWmd && config.embeddings.is_none() {
            return Err(CliError::Config("bidia-wmd needs --embeddings".into()));
        }
    }
    Ok(())
}

/// Loads word vectors and stopwords once when any algorithm needs them.
pub fn wmd_resources(
    config: &RunConfig,
    models: &Models,
    algorithms: &[AlgorithmChoice],
) -> Result<Option<WmdResources>, CliError> {
    if !algorithms.contains(&AlgorithmChoice::BidiaWmd) {
        return Ok(None);
    }
    let path = config
        .embeddings
        .as_deref()
        .ok_or_else(|| CliError::Config("bidia-wmd needs --embeddings".into()))?;
    let stopwords = match &config.stopwords {
        Some(p) => StopWords::load(p)?,
        None => StopWords::english(),
    };
    Ok(Some(WmdResources {
        table: Arc::new(EmbeddingTable::load(path)?),
        stopwords: Arc::new(stopwords),
        vocabulary: models.vocab.clone(),
    }))
}

/// One sentence decoded by one algorithm.
pub struct Decoded {
    pub output: Vec<String>,
    pub selected_index: usize,
    pub score: f64,
    /// Beam the selected hypothesis was ranked in.
    pub beam: Vec<Hypothesis>,
    /// Reverse half-beam in regular order (agreement only).
    pub reverse_beam: Option<Vec<Hypothesis>>,
    pub report: ComplexityReport,
}

pub struct Decoder<'a> {
    pub models: &'a Models,
    pub algorithm: AlgorithmChoice,
    pub search: SearchParams,
    pub lambda: f64,
    pub measure: Option<SimilaritySpec>,
}

impl<'a> Decoder<'a> {
    pub fn new(
        models: &'a Models,
        algorithm: AlgorithmChoice,
        search: SearchParams,
        lambda: f64,
        config: &RunConfig,
        wmd: Option<&WmdResources>,
    ) -> Result<Self, CliError> {
        let measure = match algorithm {
            AlgorithmChoice::BidiaBleu => Some(SimilaritySpec::bleu_t(search.max_len).with_bp_mode(config.bp_mode)),
            AlgorithmChoice::BidiaWmd => {
                let resources = wmd.ok_or_else(|| CliError::Config("bidia-wmd needs --embeddings".into()))?;
                Some(SimilaritySpec::wmd_t(search.max_len, resources.clone()).with_bp_mode(config.bp_mode))
            }
            _ => None,
        };
        Ok(Self {
            models,
            algorithm,
            search,
            lambda,
            measure,
        })
    }

    pub fn decode(&self, source: &[TokenId]) -> Result<Decoded, CliError> {
        let m = self.models;
        let alpha = self.search.alpha;
        let started = Instant::now();
        let decoded = match self.algorithm {
            AlgorithmChoice::Vbs => {
                let out = vbs_decode(&m.regular, source, &self.search)?;
                let report = ComplexityReport::from_vbs(&out, Duration::ZERO);
                Decoded {
                    score: out.selected.normalized_score(alpha),
                    output: m.vocab.decode(out.selected.content()),
                    selected_index: out.selected_index,
                    beam: out.beam,
                    reverse_beam: None,
                    report,
                }
            }
            AlgorithmChoice::Bidis => {
                let params = BidisParams::new(self.lambda, self.search);
                let out = bidis_decode(&m.regular, &m.reverse, source, &params)?;
                let report = ComplexityReport::from_bidis(&out, Duration::ZERO);
                Decoded {
                    score: out.rescored[0].score,
                    output: m.vocab.decode(out.decode.selected.content()),
                    selected_index: out.decode.selected_index,
                    beam: out.decode.beam,
                    reverse_beam: None,
                    report,
                }
            }
            AlgorithmChoice::BidiaBleu | AlgorithmChoice::BidiaWmd => {
                let measure = self.measure.as_ref().expect("agreement decoders carry a measure");
                let out = bidia_decode(&m.regular, &m.reverse, source, &self.search, measure)?;
                let report = ComplexityReport::from_bidia(&out, Duration::ZERO);
                Decoded {
                    score: out.decode.selected.normalized_score(alpha),
                    output: m.vocab.decode(out.decode.selected.content()),
                    selected_index: out.decode.selected_index,
                    beam: out.decode.beam,
                    reverse_beam: Some(out.reverse_beam),
                    report,
                }
            }
        };
        let mut decoded = decoded;
        decoded.report.wall_time = started.elapsed();
        Ok(decoded)
    }

    /// Decodes every source on `pool`; results keep the input order.
    pub fn decode_all(&self, pool: &ThreadPool, pairs: &[SurfacePair]) -> Result<Vec<Decoded>, CliError> {
        pool.install(|| {
            pairs
                .par_iter()
                .map(|pair| self.decode(&self.models.vocab.encode(&pair.source)))
                .collect()
        })
    }
}

/// Corpus BLEU-4 of decoded outputs against the pairs' targets.
pub fn bleu_of(decoded: &[Decoded], pairs: &[SurfacePair]) -> Result<f64, CliError> {
    let scored: Vec<(&[String], &[String])> = decoded
        .iter()
        .zip(pairs)
        .map(|(d, p)| (d.output.as_slice(), p.target.as_slice()))
        .collect();
    Ok(corpus_bleu4(&scored)?)
}

/// The grid value with the best validation BLEU-4, ties to the smallest, and
/// the score of every grid value. An empty validation split keeps the default.
pub fn select_lambda(
    pool: &ThreadPool,
    models: &Models,
    search: SearchParams,
    grid: &[f64],
    validation: &[SurfacePair],
    config: &RunConfig,
) -> Result<(f64, Vec<(f64, f64)>), CliError> {
    if validation.is_empty() {
        return Ok((DEFAULT_LAMBDA, Vec::new()));
    }
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        let decoder = Decoder::new(models, AlgorithmChoice::Bidis, search, lambda, config, None)?;
        let bleu = bleu_of(&decoder.decode_all(pool, validation)?, validation)?;
        scores.push((lambda, bleu));
        if best.is_none_or(|(_, b)| bleu > b) {
            best = Some((lambda, bleu));
        }
    }
    Ok((best.expect("grid is non-empty").0, scores))
}
