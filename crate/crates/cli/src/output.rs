//! Decode, beam and complexity files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bidibeam::corpus::SurfacePair;
use bidibeam::instrumentation::{check_bounds, ComplexityReport};
use bidibeam::{Hypothesis, TokenId};
use serde::{Deserialize, Serialize};

use crate::config::AlgorithmChoice;
use crate::error::CliError;
use crate::pipeline::Decoded;

pub const DECODES_FILE: &str = "decodes.csv";
pub const BEAMS_SUFFIX: &str = "beams.jsonl";
pub const COMPLEXITY_SUFFIX: &str = "complexity.csv";

/// One row of a decode CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub row: usize,
    pub source: String,
    pub reference: String,
    pub output: String,
    pub algorithm: String,
    pub n_b: usize,
    pub search_beam: usize,
    pub lambda: String,
    pub selected_index: usize,
    pub score: f64,
    pub expansions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamEntry {
    pub tokens: Vec<u32>,
    pub finished: bool,
    pub logprob: f64,
}

impl BeamEntry {
    fn from_hypothesis(h: &Hypothesis) -> Self {
        Self {
            tokens: h.tokens.iter().map(|t| t.0).collect(),
            finished: h.finished,
            logprob: h.logprob,
        }
    }

    pub fn to_hypothesis(&self) -> Hypothesis {
        Hypothesis {
            tokens: self.tokens.iter().map(|&t| TokenId(t)).collect(),
            logprob: self.logprob,
            finished: self.finished,
        }
    }
}

/// One line of a beam file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamRecord {
    pub row: usize,
    pub beam: Vec<BeamEntry>,
    pub reverse_beam: Option<Vec<BeamEntry>>,
}

/// `dir/stem.suffix` next to a decode CSV.
pub fn sibling(decodes: &Path, suffix: &str) -> PathBuf {
    let stem = decodes
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decodes.with_file_name(format!("{stem}.{suffix}"))
}

/// What a decode run writes besides the decoded sentences themselves.
pub struct RunInfo {
    pub algorithm: AlgorithmChoice,
    pub n_b: usize,
    pub lambda: Option<f64>,
    pub vocab_size: usize,
    pub max_len: usize,
    pub timing: bool,
}

pub fn decode_records(info: &RunInfo, pairs: &[SurfacePair], decoded: &[Decoded]) -> Vec<DecodeRecord> {
    let search_beam = if info.algorithm.is_agreement() {
        info.n_b / 2
    } else {
        info.n_b
    };
    let lambda = match (info.algorithm, info.lambda) {
        (AlgorithmChoice::Bidis, Some(l)) => l.to_string(),
        _ => String::new(),
    };
    pairs
        .iter()
        .zip(decoded)
        .enumerate()
        .map(|(row, (pair, d))| DecodeRecord {
            row,
            source: pair.source.join(" "),
            reference: pair.target.join(" "),
            output: d.output.join(" "),
            algorithm: info.algorithm.to_string(),
            n_b: info.n_b,
            search_beam,
            lambda: lambda.clone(),
            selected_index: d.selected_index,
            score: d.score,
            expansions: d.report.expansions,
        })
        .collect()
}

pub fn write_records<R: Serialize>(path: &Path, records: &[R]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for record in records {
        writer.serialize(record).map_err(|e| CliError::csv(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Writes a CSV with an explicit header; used when rows are built as strings.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    writer.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        writer.write_record(row).map_err(|e| CliError::csv(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<DecodeRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<DecodeRecord>, _>>()
        .map_err(|e| CliError::csv(path, e))
}

pub fn write_beams(path: &Path, decoded: &[Decoded]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (row, d) in decoded.iter().enumerate() {
        let record = BeamRecord {
            row,
            beam: d.beam.iter().map(BeamEntry::from_hypothesis).collect(),
            reverse_beam: d
                .reverse_beam
                .as_ref()
                .map(|b| b.iter().map(BeamEntry::from_hypothesis).collect()),
        };
        let line = serde_json::to_string(&record).map_err(|e| CliError::Data {
            path: path.display().to_string(),
            line: row + 1,
            message: e.to_string(),
        })?;
        writeln!(out, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_beams(path: &Path) -> Result<Vec<BeamRecord>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CliError::Data {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub const COMPLEXITY_EXTRA: [&str; 4] = ["row", "n_b", "bounds", "wall_time_us"];

/// Per-sentence counters with the outcome of the bound check.
pub fn write_complexity(path: &Path, info: &RunInfo, decoded: &[Decoded]) -> Result<(), CliError> {
    let mut header = vec![COMPLEXITY_EXTRA[0], COMPLEXITY_EXTRA[1]];
    header.extend(ComplexityReport::CSV_HEADER);
    header.extend(&COMPLEXITY_EXTRA[2..]);
    let rows: Vec<Vec<String>> = decoded
        .iter()
        .enumerate()
        .map(|(row, d)| {
            let check = check_bounds(&d.report, info.n_b, info.vocab_size, info.max_len);
            let mut fields = vec![row.to_string(), info.n_b.to_string()];
            fields.extend(d.report.csv_record());
            fields.push(check.to_string());
            fields.push(if info.timing {
                d.report.wall_time.as_micros().to_string()
            } else {
                String::new()
            });
            fields
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// Writes the decode CSV and its complexity file, plus beams when asked.
pub fn write_run(
    decodes: &Path,
    info: &RunInfo,
    pairs: &[SurfacePair],
    decoded: &[Decoded],
    beams: bool,
) -> Result<(), CliError> {
    write_records(decodes, &decode_records(info, pairs, decoded))?;
    write_complexity(&sibling(decodes, COMPLEXITY_SUFFIX), info, decoded)?;
    if beams {
        write_beams(&sibling(decodes, BEAMS_SUFFIX), decoded)?;
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
