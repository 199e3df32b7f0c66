use std::fs::File;
use std::io::{BufWriter, Write};

use bidibeam::synthetic::{dialogue_corpus, embeddings, write_embeddings};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::create_dir;

pub const CORPUS_FILE: &str = "corpus.tsv";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let out = config.require_out()?;
    create_dir(out)?;
    let corpus = out.join(CORPUS_FILE);
    let file = File::create(&corpus).map_err(|e| CliError::io(&corpus, e))?;
    let mut w = BufWriter::new(file);
    for (source, target) in dialogue_corpus(config.count, config.seed) {
        writeln!(w, "{source}\t{target}").map_err(|e| CliError::io(&corpus, e))?;
    }
    w.flush().map_err(|e| CliError::io(&corpus, e))?;

    let vectors = out.join(EMBEDDINGS_FILE);
    let file = File::create(&vectors).map_err(|e| CliError::io(&vectors, e))?;
    let mut w = BufWriter::new(file);
    write_embeddings(&embeddings(config.dim, config.seed), &mut w).map_err(|e| CliError::io(&vectors, e))?;
    w.flush().map_err(|e| CliError::io(&vectors, e))?;
    config.write_resolved(out)?;
    println!(
        "wrote {} pairs to {} and vectors to {}",
        config.count,
        corpus.display(),
        vectors.display()
    );
    Ok(())
}
