//! Exact operation counters for the three decoders and their cost bounds.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::beam::{DecodeOutput, SortEvent};
use crate::bidi::{BidiaOutput, BidisOutput};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Vbs,
    Bidis,
    Bidia,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vbs => "vbs",
            Self::Bidis => "bidis",
            Self::Bidia => "bidia",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vbs" => Ok(Self::Vbs),
            "bidis" => Ok(Self::Bidis),
            "bidia" => Ok(Self::Bidia),
            other => Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub algorithm: Algorithm,
    pub expansions: u64,
    pub sort_events: Vec<SortEvent>,
    pub pairwise_sim_evals: u64,
    pub rescoring_evals: u64,
    pub wall_time: Duration,
}

impl ComplexityReport {
    pub fn from_vbs(output: &DecodeOutput, wall_time: Duration) -> Self {
        Self {
            algorithm: Algorithm::Vbs,
            expansions: output.stats.expansions,
            sort_events: output.stats.sort_events.clone(),
            pairwise_sim_evals: 0,
            rescoring_evals: 0,
            wall_time,
        }
    }

    pub fn from_bidis(output: &BidisOutput, wall_time: Duration) -> Self {
        Self {
            algorithm: Algorithm::Bidis,
            rescoring_evals: output.rescoring_evals() as u64,
            ..Self::from_vbs(&output.decode, wall_time)
        }
    }

    pub fn from_bidia(output: &BidiaOutput, wall_time: Duration) -> Self {
        Self {
            algorithm: Algorithm::Bidia,
            pairwise_sim_evals: output.pairwise_evals as u64,
            ..Self::from_vbs(&output.decode, wall_time)
        }
    }

    pub fn max_sort(&self) -> usize {
        self.sort_events.iter().map(|e| e.candidates).max().unwrap_or(0)
    }

    /// Counter columns. Wall time is left out so that records of identical
    /// runs are identical.
    pub const CSV_HEADER: [&'static str; 6] = [
        "algorithm",
        "expansions",
        "sort_events",
        "max_sort",
        "pairwise_sim_evals",
        "rescoring_evals",
    ];

    /// Fields in [`Self::CSV_HEADER`] order.
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.algorithm.to_string(),
            self.expansions.to_string(),
            self.sort_events.len().to_string(),
            self.max_sort().to_string(),
            self.pairwise_sim_evals.to_string(),
            self.rescoring_evals.to_string(),
        ]
    }
}

/// Outcome of [`check_bounds`]; empty `violations` means every bound held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub violations: Vec<String>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            f.write_str("all bounds hold")
        } else {
            f.write_str(&self.violations.join("; "))
        }
    }
}

/// Checks the counters of one run against the cost bounds for beam size `B`
/// (the total budget; agreement searches use `B/2` per direction),
/// vocabulary `V` and maximum length `T`.
pub fn check_bounds(report: &ComplexityReport, beam_size: usize, vocab: usize, max_len: usize) -> BoundCheck {
    let mut violations = Vec::new();
    let (b, v, t) = (beam_size as u64, vocab as u64, max_len as u64);
    let (expansion_bound, sort_bound) = match report.algorithm {
        Algorithm::Vbs | Algorithm::Bidis => (t * b * v, b * v),
        Algorithm::Bidia => (2 * t * (b / 2) * v, (b / 2) * v),
    };
    if report.expansions > expansion_bound {
        violations.push(format!("expansions {} > {expansion_bound}", report.expansions));
    }
    for event in &report.sort_events {
        if event.candidates as u64 > sort_bound {
            violations.push(format!(
                "step {} sorted {} > {sort_bound} candidates",
                event.step, event.candidates
            ));
        }
    }
    match report.algorithm {
        Algorithm::Vbs => {}
        Algorithm::Bidis => {
            if report.rescoring_evals != b {
                violations.push(format!("rescoring_evals {} != {b}", report.rescoring_evals));
            }
        }
        Algorithm::Bidia => {
            let pairs = (b / 2) * (b / 2);
            if report.pairwise_sim_evals != pairs {
                violations.push(format!("pairwise_sim_evals {} != {pairs}", report.pairwise_sim_evals));
            }
        }
    }
    BoundCheck { violations }
}
