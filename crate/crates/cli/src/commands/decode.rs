use bidibeam::bidi::DEFAULT_LAMBDA;

use crate::config::{AlgorithmChoice, RunConfig};
use crate::error::CliError;
use crate::output::{create_dir, write_run, RunInfo, DECODES_FILE};
use crate::pipeline::{
    bleu_of, check_plan, load_split, select_lambda, thread_pool, wmd_resources, Decoder, Models, TEST_SPLIT,
    VALIDATION_SPLIT,
};

pub fn run(config: &mut RunConfig) -> Result<(), CliError> {
    let algorithm = config.algorithm;
    let search = config.search;
    check_plan(config, &[algorithm], &[search.beam_size])?;
    let out = config.require_out()?.to_path_buf();
    let dir = config.model_dir()?.to_path_buf();
    let pool = thread_pool(config.jobs)?;
    let models = Models::load(&dir)?;
    let test = load_split(&dir, TEST_SPLIT)?;
    if test.is_empty() {
        return Err(CliError::Input(format!(
            "{}: test split is empty",
            dir.join(TEST_SPLIT).display()
        )));
    }

    let lambda = match (algorithm, config.lambda) {
        (_, Some(l)) => l,
        (AlgorithmChoice::Bidis, None) => {
            let validation = load_split(&dir, VALIDATION_SPLIT)?;
            let (l, _) = select_lambda(&pool, &models, search, &config.lambda_grid, &validation, config)?;
            config.set_lambda(l);
            l
        }
        _ => DEFAULT_LAMBDA,
    };
    let wmd = wmd_resources(config, &models, &[algorithm])?;
    let decoder = Decoder::new(&models, algorithm, search, lambda, config, wmd.as_ref())?;
    let decoded = decoder.decode_all(&pool, &test)?;

    create_dir(&out)?;
    let info = RunInfo {
        algorithm,
        n_b: search.beam_size,
        lambda: Some(lambda),
        vocab_size: models.vocab.len(),
        max_len: search.max_len,
        timing: config.timing,
    };
    let path = out.join(DECODES_FILE);
    write_run(&path, &info, &test, &decoded, config.persist_beams)?;
    config.write_resolved(&out)?;
    println!(
        "{algorithm} B={} decoded {} sentences, BLEU-4 {:.2}; wrote {}",
        search.beam_size,
        decoded.len(),
        bleu_of(&decoded, &test)?,
        path.display()
    );
    Ok(())
}
