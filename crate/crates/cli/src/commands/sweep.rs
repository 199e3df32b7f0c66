use bidibeam::bidi::DEFAULT_LAMBDA;
use bidibeam::eval::distinct_n;
use bidibeam::SearchParams;
use serde::Serialize;

use crate::config::{AlgorithmChoice, RunConfig};
use crate::error::CliError;
use crate::output::{create_dir, write_records, write_run, RunInfo};
use crate::pipeline::{
    bleu_of, check_plan, load_split, select_lambda, thread_pool, wmd_resources, Decoder, Models, TEST_SPLIT,
    VALIDATION_SPLIT,
};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const LAMBDA_FILE: &str = "lambda_selection.csv";
pub const DECODES_DIR: &str = "decodes";

#[derive(Debug, Serialize)]
struct SweepRow {
    n_b: usize,
    algorithm: String,
    search_beam: usize,
    lambda: String,
    sentences: usize,
    bleu4: f64,
    distinct1: f64,
    distinct2: f64,
    expansions: u64,
}

#[derive(Debug, Serialize)]
struct LambdaRow {
    n_b: usize,
    lambda: f64,
    validation_bleu4: f64,
    selected: bool,
}

/// File name of one sweep cell inside the decodes directory.
pub fn cell_file(algorithm: AlgorithmChoice, n_b: usize) -> String {
    format!("{algorithm}-nb{n_b}.csv")
}

/// Distinct-n over outputs, 0 when every output is empty.
fn distinct(outputs: &[Vec<String>], n: usize) -> Result<f64, CliError> {
    if outputs.iter().all(Vec::is_empty) {
        return Ok(0.0);
    }
    Ok(distinct_n(outputs, n)?)
}

pub fn run(config: &mut RunConfig) -> Result<(), CliError> {
    let algorithms = config.algorithms.clone();
    let beam_sizes = config.nb.clone();
    check_plan(config, &algorithms, &beam_sizes)?;
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
    let validation = load_split(&dir, VALIDATION_SPLIT)?;
    let wmd = wmd_resources(config, &models, &algorithms)?;
    let decodes_dir = out.join(DECODES_DIR);
    create_dir(&decodes_dir)?;

    let mut rows = Vec::new();
    let mut lambda_rows = Vec::new();
    for &n_b in &beam_sizes {
        let search = SearchParams {
            beam_size: n_b,
            ..config.search
        };
        for &algorithm in &algorithms {
            let lambda = match (algorithm, config.lambda) {
                (_, Some(l)) => l,
                (AlgorithmChoice::Bidis, None) => {
                    let (chosen, scores) =
                        select_lambda(&pool, &models, search, &config.lambda_grid, &validation, config)?;
                    lambda_rows.extend(scores.into_iter().map(|(lambda, bleu)| LambdaRow {
                        n_b,
                        lambda,
                        validation_bleu4: bleu,
                        selected: lambda == chosen,
                    }));
                    chosen
                }
                _ => DEFAULT_LAMBDA,
            };
            let decoder = Decoder::new(&models, algorithm, search, lambda, config, wmd.as_ref())?;
            let decoded = decoder.decode_all(&pool, &test)?;
            let info = RunInfo {
                algorithm,
                n_b,
                lambda: Some(lambda),
                vocab_size: models.vocab.len(),
                max_len: search.max_len,
                timing: config.timing,
            };
            write_run(
                &decodes_dir.join(cell_file(algorithm, n_b)),
                &info,
                &test,
                &decoded,
                true,
            )?;

            let outputs: Vec<Vec<String>> = decoded.iter().map(|d| d.output.clone()).collect();
            let row = SweepRow {
                n_b,
                algorithm: algorithm.to_string(),
                search_beam: if algorithm.is_agreement() { n_b / 2 } else { n_b },
                lambda: if algorithm == AlgorithmChoice::Bidis {
                    lambda.to_string()
                } else {
                    String::new()
                },
                sentences: decoded.len(),
                bleu4: bleu_of(&decoded, &test)?,
                distinct1: distinct(&outputs, 1)?,
                distinct2: distinct(&outputs, 2)?,
                expansions: decoded.iter().map(|d| d.report.expansions).sum(),
            };
            println!("N_B={n_b} {algorithm}: BLEU-4 {:.2}", row.bleu4);
            rows.push(row);
        }
    }
    write_records(&out.join(SWEEP_FILE), &rows)?;
    if !lambda_rows.is_empty() {
        write_records(&out.join(LAMBDA_FILE), &lambda_rows)?;
    }
    config.write_resolved(&out)?;
    println!("wrote {}", out.join(SWEEP_FILE).display());
    Ok(())
}
