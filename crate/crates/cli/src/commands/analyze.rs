use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use bidibeam::corpus::{load_corpus, tokenize, SurfacePair};
use bidibeam::eval::{best_rank, corpus_bleu4, word_position_frequency, RankHistogram};
use bidibeam::{Direction, Hypothesis, Vocabulary};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{create_dir, read_beams, read_records, sibling, write_records, BEAMS_SUFFIX, COMPLEXITY_SUFFIX};
use crate::pipeline::{TRAIN_SPLIT, VOCAB_FILE};

pub const RANK_FILE: &str = "rank_histogram.csv";
pub const BEST_FILE: &str = "best_hypothesis.csv";
pub const POSITIONS_FILE: &str = "word_positions.csv";
pub const SUMMARY_FILE: &str = "beam_summary.csv";
pub const BEST_SYSTEM: &str = "best-hypothesis";

#[derive(Debug, Serialize)]
struct RankRow {
    run: String,
    algorithm: String,
    n_b: usize,
    rank: usize,
    count: u64,
}

#[derive(Debug, Serialize)]
struct BestRow {
    run: String,
    algorithm: String,
    n_b: usize,
    sentences: usize,
    candidates: usize,
    bleu4: f64,
    best_hypothesis_bleu4: f64,
}

#[derive(Debug, Serialize)]
pub struct PositionRow {
    pub order: Direction,
    pub position: usize,
    pub rank: usize,
    pub word: String,
    pub count: u64,
}

/// Top words at positions 1 to 3 of `targets`, read in both directions.
pub fn position_rows(targets: &[Vec<String>], top_k: usize) -> Result<Vec<PositionRow>, CliError> {
    let mut rows = Vec::new();
    for direction in [Direction::Regular, Direction::Reverse] {
        for position in 1..=3 {
            let ranked = word_position_frequency(targets, position, direction, top_k)?;
            rows.extend(ranked.into_iter().enumerate().map(|(i, (word, count))| PositionRow {
                order: direction,
                position,
                rank: i + 1,
                word,
                count,
            }));
        }
    }
    Ok(rows)
}

/// Decode CSVs under `path`, sorted by name.
fn decode_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| CliError::io(path, e))? {
        let p = entry.map_err(|e| CliError::io(path, e))?.path();
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.ends_with(".csv") && !name.ends_with(&format!(".{COMPLEXITY_SUFFIX}")) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: no decode CSVs found", path.display())));
    }
    Ok(files)
}

/// One decode CSV with its persisted beams, in surface form.
struct Run {
    name: String,
    algorithm: String,
    n_b: usize,
    search_beam: usize,
    selected_indices: Vec<usize>,
    references: Vec<Vec<String>>,
    outputs: Vec<Vec<String>>,
    /// Every hypothesis the run produced for each sentence; agreement runs
    /// contribute both half-beams.
    pools: Vec<Vec<Vec<String>>>,
}

impl Run {
    fn bleu4(&self) -> Result<f64, CliError> {
        let pairs: Vec<(&[String], &[String])> = self
            .outputs
            .iter()
            .zip(&self.references)
            .map(|(o, r)| (o.as_slice(), r.as_slice()))
            .collect();
        Ok(corpus_bleu4(&pairs)?)
    }
}

fn surfaces(vocab: &Vocabulary, h: &Hypothesis) -> Vec<String> {
    vocab.decode(h.content())
}

fn load_run(file: &Path, vocab: &Vocabulary) -> Result<Run, CliError> {
    let records = read_records(file)?;
    let Some(first) = records.first() else {
        return Err(CliError::Input(format!("{}: no decoded rows", file.display())));
    };
    let beams_path = sibling(file, BEAMS_SUFFIX);
    if !beams_path.exists() {
        return Err(CliError::Input(format!(
            "{}: beams were not saved; rerun decode with --persist-beams",
            beams_path.display()
        )));
    }
    let beams = read_beams(&beams_path)?;
    if beams.len() != records.len() {
        return Err(CliError::Input(format!(
            "{}: {} beams for {} decoded rows",
            beams_path.display(),
            beams.len(),
            records.len()
        )));
    }
    let pools = beams
        .iter()
        .map(|b| {
            b.beam
                .iter()
                .chain(b.reverse_beam.iter().flatten())
                .map(|e| surfaces(vocab, &e.to_hypothesis()))
                .collect()
        })
        .collect();
    Ok(Run {
        name: file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        algorithm: first.algorithm.clone(),
        n_b: first.n_b,
        search_beam: first.search_beam,
        selected_indices: records.iter().map(|r| r.selected_index).collect(),
        references: records.iter().map(|r| tokenize(&r.reference)).collect(),
        outputs: records.iter().map(|r| tokenize(&r.output)).collect(),
        pools,
    })
}

/// Corpus BLEU-4 when each sentence takes its best candidate by sentence BLEU-4.
fn oracle_bleu4(pools: &[Vec<&Vec<String>>], references: &[Vec<String>]) -> Result<f64, CliError> {
    let mut picks = Vec::with_capacity(references.len());
    for (row, (pool, reference)) in pools.iter().zip(references).enumerate() {
        let best = best_rank(pool, reference).ok_or_else(|| CliError::Input(format!("empty beam in row {row}")))?;
        picks.push((pool[best - 1].as_slice(), reference.as_slice()));
    }
    Ok(corpus_bleu4(&picks)?)
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    n_b: usize,
    system: String,
    bleu4: f64,
    candidates: Option<usize>,
    new_candidates: Option<usize>,
}

/// Per beam size: each algorithm's BLEU-4, then the best-hypothesis BLEU-4
/// over the union of every run's candidates at that size, with the number of
/// distinct candidates absent at the previous size.
fn beam_summary(runs: &[Run]) -> Result<Vec<SummaryRow>, CliError> {
    let mut by_size: BTreeMap<usize, Vec<&Run>> = BTreeMap::new();
    for run in runs {
        by_size.entry(run.n_b).or_default().push(run);
    }
    let mut rows = Vec::new();
    let mut previous: Option<Vec<BTreeSet<&Vec<String>>>> = None;
    for (n_b, group) in by_size {
        let references = &group[0].references;
        if let Some(other) = group.iter().find(|r| &r.references != references) {
            return Err(CliError::Input(format!(
                "{} and {} decode different test sets",
                group[0].name, other.name
            )));
        }
        let mut union: Vec<BTreeSet<&Vec<String>>> = vec![BTreeSet::new(); references.len()];
        for run in &group {
            for (set, pool) in union.iter_mut().zip(&run.pools) {
                set.extend(pool);
            }
            rows.push(SummaryRow {
                n_b,
                system: run.algorithm.clone(),
                bleu4: run.bleu4()?,
                candidates: None,
                new_candidates: None,
            });
        }
        let new_candidates = match &previous {
            Some(prev) => union
                .iter()
                .zip(prev)
                .map(|(now, before)| now.difference(before).count())
                .sum(),
            None => union.iter().map(BTreeSet::len).sum(),
        };
        let pools: Vec<Vec<&Vec<String>>> = union.iter().map(|s| s.iter().copied().collect()).collect();
        rows.push(SummaryRow {
            n_b,
            system: BEST_SYSTEM.into(),
            bleu4: oracle_bleu4(&pools, references)?,
            candidates: Some(union.iter().map(BTreeSet::len).sum()),
            new_candidates: Some(new_candidates),
        });
        previous = Some(union);
    }
    Ok(rows)
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let out = config.require_out()?.to_path_buf();
    let decodes = config
        .decodes
        .as_deref()
        .ok_or_else(|| CliError::Config("--decodes is required".into()))?;
    let models = config
        .models
        .as_deref()
        .ok_or_else(|| CliError::Config("--models is required".into()))?;
    let vocab = Vocabulary::load(&models.join(VOCAB_FILE))?;
    create_dir(&out)?;

    let files = decode_files(decodes)?;
    let runs: Vec<Run> = files.iter().map(|f| load_run(f, &vocab)).collect::<Result<_, _>>()?;

    let mut rank_rows = Vec::new();
    let mut best_rows = Vec::new();
    for run in &runs {
        let histogram = RankHistogram::from_indices(run.selected_indices.iter().copied(), run.search_beam)?;
        rank_rows.extend(histogram.counts.iter().enumerate().map(|(i, &count)| RankRow {
            run: run.name.clone(),
            algorithm: run.algorithm.clone(),
            n_b: run.n_b,
            rank: i + 1,
            count,
        }));
        let pools: Vec<Vec<&Vec<String>>> = run.pools.iter().map(|p| p.iter().collect()).collect();
        best_rows.push(BestRow {
            run: run.name.clone(),
            algorithm: run.algorithm.clone(),
            n_b: run.n_b,
            sentences: run.references.len(),
            candidates: run.pools.iter().map(Vec::len).sum(),
            bleu4: run.bleu4()?,
            best_hypothesis_bleu4: oracle_bleu4(&pools, &run.references)?,
        });
    }
    write_records(&out.join(RANK_FILE), &rank_rows)?;
    write_records(&out.join(BEST_FILE), &best_rows)?;
    write_records(&out.join(SUMMARY_FILE), &beam_summary(&runs)?)?;

    let corpus_path = match &config.corpus {
        Some(p) => p.clone(),
        None => models.join(TRAIN_SPLIT),
    };
    let format = if config.corpus.is_some() {
        config.format
    } else {
        bidibeam::corpus::CorpusFormat::Tsv
    };
    let pairs: Vec<SurfacePair> = load_corpus(&corpus_path, format)?;
    let targets: Vec<Vec<String>> = pairs.into_iter().map(|p| p.target).collect();
    write_records(&out.join(POSITIONS_FILE), &position_rows(&targets, config.top_k)?)?;
    config.write_resolved(&out)?;
    println!("analyzed {} decode runs; wrote {}", files.len(), out.display());
    Ok(())
}
