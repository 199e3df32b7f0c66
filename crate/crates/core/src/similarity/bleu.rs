use std::collections::HashMap;
use std::hash::Hash;

/// Clipped n-gram matches of `hypothesis` against `reference`, and the number
/// of n-grams in `hypothesis`.
pub fn clipped_matches<T: Eq + Hash>(hypothesis: &[T], reference: &[T], n: usize) -> (u64, u64) {
    if n == 0 || hypothesis.len() < n {
        return (0, 0);
    }
    let mut reference_counts: HashMap<&[T], u64> = HashMap::new();
    for gram in reference.windows(n) {
        *reference_counts.entry(gram).or_default() += 1;
    }
    let mut hypothesis_counts: HashMap<&[T], u64> = HashMap::new();
    for gram in hypothesis.windows(n) {
        *hypothesis_counts.entry(gram).or_default() += 1;
    }
    let matches = hypothesis_counts
        .iter()
        .map(|(gram, &c)| c.min(reference_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matches, (hypothesis.len() + 1 - n) as u64)
}

/// `brevity · exp(Σ wₙ log pₙ)` over orders `1..=weights.len()`.
///
/// When any order has zero matches, orders n ≥ 2 use `(matches + 1) / (total + 1)`.
/// Unigram precision is never smoothed, so a hypothesis sharing no word with
/// the reference scores 0.
pub fn smoothed_bleu<T: Eq + Hash>(hypothesis: &[T], reference: &[T], weights: &[f64], brevity: f64) -> f64 {
    let stats: Vec<(u64, u64)> = (1..=weights.len())
        .map(|n| clipped_matches(hypothesis, reference, n))
        .collect();
    let smooth = stats.iter().any(|&(m, _)| m == 0);
    let mut log_sum = 0.0;
    for (idx, (&(matches, total), weight)) in stats.iter().zip(weights).enumerate() {
        let precision = if idx >= 1 && smooth {
            (matches + 1) as f64 / (total + 1) as f64
        } else if total == 0 {
            0.0
        } else {
            matches as f64 / total as f64
        };
        log_sum += weight * precision.ln();
    }
    brevity * log_sum.exp()
}
