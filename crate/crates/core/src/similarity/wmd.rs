use std::collections::BTreeMap;

use super::embeddings::{EmbeddingTable, StopWords};
use super::transport::{solve_transport, TransportProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmdReport {
    pub distance: f64,
    /// Non-stopword tokens dropped because the table has no vector for them.
    pub oov_dropped: usize,
}

/// Normalized bag of words over the kept tokens, sorted by word.
fn bag<'a, S: AsRef<str>>(
    tokens: &'a [S],
    table: &EmbeddingTable,
    stopwords: &StopWords,
    oov: &mut usize,
) -> Vec<(&'a str, f64)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for token in tokens {
        let word = token.as_ref();
        if stopwords.contains(word) {
            continue;
        }
        if table.get(word).is_none() {
            *oov += 1;
            continue;
        }
        *counts.entry(word).or_default() += 1;
        total += 1;
    }
    counts.into_iter().map(|(w, c)| (w, c as f64 / total as f64)).collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Word Mover's Distance after stopword removal and out-of-table filtering.
///
/// Fails with [`Error::DegeneratePair`] when either side has nothing left.
pub fn wmd_report<S: AsRef<str>>(x: &[S], y: &[S], table: &EmbeddingTable, stopwords: &StopWords) -> Result<WmdReport> {
    let mut oov = 0;
    let left = bag(x, table, stopwords, &mut oov);
    let right = bag(y, table, stopwords, &mut oov);
    if oov > 0 {
        log::debug!("wmd: dropped {oov} token(s) without embeddings");
    }
    if left.is_empty() || right.is_empty() {
        return Err(Error::DegeneratePair);
    }
    let mut cost = Vec::with_capacity(left.len() * right.len());
    for (a, _) in &left {
        let va = table.get(a).expect("filtered to known words");
        for (b, _) in &right {
            cost.push(euclidean(va, table.get(b).expect("filtered to known words")));
        }
    }
    let problem = TransportProblem::new(
        left.iter().map(|&(_, w)| w).collect(),
        right.iter().map(|&(_, w)| w).collect(),
        cost,
    )?;
    Ok(WmdReport {
        distance: solve_transport(&problem)?.cost,
        oov_dropped: oov,
    })
}

pub fn wmd<S: AsRef<str>>(x: &[S], y: &[S], table: &EmbeddingTable, stopwords: &StopWords) -> Result<f64> {
    wmd_report(x, y, table, stopwords).map(|r| r.distance)
}
