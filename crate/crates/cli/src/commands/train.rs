use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use bidibeam::corpus::{load_corpus, write_tsv, CorpusSplit, SurfacePair};
use bidibeam::{ConditionalNGramLm, Direction, SentencePair, Vocabulary};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::create_dir;
use crate::pipeline::{REGULAR_MODEL_FILE, REVERSE_MODEL_FILE, TEST_SPLIT, TRAIN_SPLIT, VALIDATION_SPLIT, VOCAB_FILE};

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let corpus = config.require_corpus()?;
    let out = config.require_out()?;
    let pairs = load_corpus(corpus, config.format)?;
    let split = CorpusSplit::new(pairs, config.split, config.seed)?;
    if split.train.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no training pairs after splitting",
            corpus.display()
        )));
    }
    let vocab = Vocabulary::build(&split.train, config.min_count)?;
    let encoded: Vec<SentencePair> = split
        .train
        .iter()
        .map(|p| vocab.encode_pair(p))
        .collect::<Result<_, _>>()?;
    let (regular, reverse) = rayon::join(
        || ConditionalNGramLm::train(&encoded, vocab.len(), Direction::Regular, config.ngram.clone()),
        || ConditionalNGramLm::train(&encoded, vocab.len(), Direction::Reverse, config.ngram.clone()),
    );

    create_dir(out)?;
    vocab.save(&out.join(VOCAB_FILE))?;
    regular?.save(&out.join(REGULAR_MODEL_FILE))?;
    reverse?.save(&out.join(REVERSE_MODEL_FILE))?;
    save_split(&out.join(TRAIN_SPLIT), &split.train)?;
    save_split(&out.join(VALIDATION_SPLIT), &split.validation)?;
    save_split(&out.join(TEST_SPLIT), &split.test)?;
    config.write_resolved(out)?;
    println!(
        "trained on {} pairs ({} validation, {} test), vocabulary {}; models in {}",
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        vocab.len(),
        out.display()
    );
    Ok(())
}

fn save_split(path: &Path, pairs: &[SurfacePair]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_tsv(pairs, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}
