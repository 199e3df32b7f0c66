use std::collections::HashSet;

use bidibeam::corpus::load_corpus;
use bidibeam::eval::distinct_n;

use crate::commands::analyze::{position_rows, POSITIONS_FILE};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{create_dir, write_records, write_rows};

pub const STATS_FILE: &str = "corpus_stats.csv";

fn mean(lengths: impl Iterator<Item = usize>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        lengths.sum::<usize>() as f64 / n as f64
    }
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let corpus = config.require_corpus()?;
    let out = config.require_out()?;
    let pairs = load_corpus(corpus, config.format)?;
    let targets: Vec<Vec<String>> = pairs.iter().map(|p| p.target.clone()).collect();
    let n = pairs.len();
    let types: HashSet<&str> = pairs
        .iter()
        .flat_map(|p| p.source.iter().chain(&p.target))
        .map(String::as_str)
        .collect();
    let distinct = |k| -> Result<f64, CliError> {
        if targets.iter().all(Vec::is_empty) {
            Ok(0.0)
        } else {
            Ok(distinct_n(&targets, k)?)
        }
    };
    let stats: Vec<(&str, String)> = vec![
        ("pairs", n.to_string()),
        (
            "source_tokens",
            pairs.iter().map(|p| p.source.len()).sum::<usize>().to_string(),
        ),
        (
            "target_tokens",
            pairs.iter().map(|p| p.target.len()).sum::<usize>().to_string(),
        ),
        (
            "mean_source_len",
            mean(pairs.iter().map(|p| p.source.len()), n).to_string(),
        ),
        (
            "mean_target_len",
            mean(pairs.iter().map(|p| p.target.len()), n).to_string(),
        ),
        (
            "max_target_len",
            pairs.iter().map(|p| p.target.len()).max().unwrap_or(0).to_string(),
        ),
        ("word_types", types.len().to_string()),
        ("target_distinct1", distinct(1)?.to_string()),
        ("target_distinct2", distinct(2)?.to_string()),
    ];
    create_dir(out)?;
    let rows: Vec<Vec<String>> = stats.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    write_rows(&out.join(STATS_FILE), &["statistic", "value"], &rows)?;
    write_records(&out.join(POSITIONS_FILE), &position_rows(&targets, config.top_k)?)?;
    config.write_resolved(out)?;
    for (k, v) in &stats {
        println!("{k}\t{v}");
    }
    Ok(())
}
