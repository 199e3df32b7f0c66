//! Brute-force reference implementations for cross-checking the decoder.
//!
//! Nothing here depends on `bidibeam`: tokens are plain `u32`, models are
//! closures, and every routine favours obviousness over speed.

use nalgebra::{DMatrix, DVector};

/// `((5 + len)^alpha) / 6^alpha`.
pub fn gnmt_penalty(len: usize, alpha: f64) -> f64 {
    (5.0 + len as f64).powf(alpha) / 6f64.powf(alpha)
}

/// Highest-scoring sequence among everything a beam search of length `max_len`
/// can return: sequences ending in `eos` of length at most `max_len`, and
/// sequences without `eos` of length exactly `max_len`.
///
/// `next(prefix)` gives the log-probabilities of every token after `prefix`.
/// Ties go to the lexicographically smaller sequence.
pub fn exhaustive_argmax<F>(vocab: u32, eos: u32, max_len: usize, alpha: f64, next: F) -> (Vec<u32>, f64)
where
    F: Fn(&[u32]) -> Vec<f64>,
{
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut consider = |seq: Vec<u32>, logprob: f64| {
        let score = logprob / gnmt_penalty(seq.len(), alpha);
        let better = match &best {
            None => true,
            Some((b_seq, b_score)) => score > *b_score || (score == *b_score && seq < *b_seq),
        };
        if better {
            best = Some((seq, score));
        }
    };
    // Depth-first over open prefixes, each with its running log-probability.
    let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 0.0)];
    while let Some((prefix, logprob)) = stack.pop() {
        let dist = next(&prefix);
        assert_eq!(dist.len(), vocab as usize);
        for w in 0..vocab {
            let mut seq = prefix.clone();
            seq.push(w);
            let lp = logprob + dist[w as usize];
            if w == eos || seq.len() == max_len {
                consider(seq, lp);
            } else {
                stack.push((seq, lp));
            }
        }
    }
    best.expect("vocabulary is non-empty")
}

/// Minimum transport cost by enumerating basic feasible solutions.
///
/// Every vertex of the transportation polytope is supported on a spanning
/// tree of the complete bipartite graph. For each set of `m + n − 1` cells
/// forming a tree, the marginal equations are solved directly and kept
/// when the flow is non-negative.
pub fn transport_by_vertices(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let k = m + n - 1;
    let cells = m * n;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    for_each_subset(cells, k, &mut chosen, &mut |subset| {
        if !is_spanning_tree(subset, m, n) {
            return;
        }
        // Rows: m supply equations, then the first n − 1 demand equations
        // (the last is implied by the totals).
        let a = DMatrix::from_fn(k, k, |r, c| {
            let (i, j) = (subset[c] / n, subset[c] % n);
            if r < m {
                (i == r) as u8 as f64
            } else {
                (j == r - m) as u8 as f64
            }
        });
        let b = DVector::from_iterator(k, supply.iter().chain(&demand[..n - 1]).copied());
        let Some(x) = a.lu().solve(&b) else { return };
        if x.iter().any(|&v| v < -1e-12) {
            return;
        }
        let value: f64 = subset.iter().zip(x.iter()).map(|(&c, &f)| f * cost[c]).sum();
        best = best.min(value);
    });
    best
}

fn for_each_subset(n: usize, k: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        f(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&c| c + 1);
    let remaining = k - chosen.len();
    for c in start..=n.saturating_sub(remaining) {
        chosen.push(c);
        for_each_subset(n, k, chosen, f);
        chosen.pop();
    }
}

fn is_spanning_tree(cells: &[usize], m: usize, n: usize) -> bool {
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &cell in cells {
        let (a, b) = (find(&mut parent, cell / n), find(&mut parent, m + cell % n));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Minimum-cost flow by successive shortest paths (Bellman-Ford on the
/// residual graph). Supplies and demands are arbitrary non-negative reals
/// with equal totals.
pub fn transport_by_shortest_paths(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let mut flow = vec![0.0; m * n];
    let mut left_supply = supply.to_vec();
    let mut left_demand = demand.to_vec();
    let total: f64 = supply.iter().sum();
    let mut shipped = 0.0;
    while shipped < total - 1e-12 {
        // Nodes: rows 0..m, columns m..m+n. Start from every row with supply.
        let mut dist = vec![f64::INFINITY; m + n];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; m + n];
        for i in 0..m {
            if left_supply[i] > 1e-15 {
                dist[i] = 0.0;
            }
        }
        for _ in 0..m + n {
            let mut changed = false;
            for i in 0..m {
                for j in 0..n {
                    let c = cost[i * n + j];
                    if dist[i] + c < dist[m + j] - 1e-15 {
                        dist[m + j] = dist[i] + c;
                        pred[m + j] = Some((i, true));
                        changed = true;
                    }
                    if flow[i * n + j] > 1e-15 && dist[m + j] - c < dist[i] - 1e-15 {
                        dist[i] = dist[m + j] - c;
                        pred[i] = Some((m + j, false));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(target) = (0..n)
            .filter(|&j| left_demand[j] > 1e-15 && dist[m + j].is_finite())
            .min_by(|&a, &b| dist[m + a].total_cmp(&dist[m + b]))
        else {
            break;
        };
        let mut path = Vec::new();
        let mut node = m + target;
        while let Some((prev, forward)) = pred[node] {
            path.push((prev, node, forward));
            node = prev;
        }
        let origin = node;
        let mut amount = left_supply[origin].min(left_demand[target]);
        for &(a, b, forward) in &path {
            if !forward {
                // Backward edge from column a to row b undoes flow on (b, a).
                amount = amount.min(flow[b * n + (a - m)]);
            }
        }
        for &(a, b, forward) in &path {
            if forward {
                flow[a * n + (b - m)] += amount;
            } else {
                flow[b * n + (a - m)] -= amount;
            }
        }
        left_supply[origin] -= amount;
        left_demand[target] -= amount;
        shipped += amount;
    }
    flow.iter().zip(cost).map(|(f, c)| f * c).sum()
}

/// Word Mover's Distance: stopwords removed, words without a vector dropped,
/// normalized bag-of-words weights, Euclidean ground cost. `None` when a side
/// is empty after filtering.
pub fn naive_wmd<'a, E>(x: &[&'a str], y: &[&'a str], embed: E, stopwords: &[&str]) -> Option<f64>
where
    E: Fn(&str) -> Option<Vec<f64>>,
{
    let bag = |tokens: &[&'a str]| -> Vec<(&'a str, f64)> {
        let kept: Vec<&str> = tokens
            .iter()
            .copied()
            .filter(|w| !stopwords.contains(w) && embed(w).is_some())
            .collect();
        let mut unique = kept.clone();
        unique.sort_unstable();
        unique.dedup();
        unique
            .into_iter()
            .map(|w| (w, kept.iter().filter(|&&k| k == w).count() as f64 / kept.len() as f64))
            .collect()
    };
    let (left, right) = (bag(x), bag(y));
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let mut cost = Vec::new();
    for (a, _) in &left {
        let va = embed(a).unwrap();
        for (b, _) in &right {
            let vb = embed(b).unwrap();
            cost.push(va.iter().zip(&vb).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt());
        }
    }
    let supply: Vec<f64> = left.iter().map(|p| p.1).collect();
    let demand: Vec<f64> = right.iter().map(|p| p.1).collect();
    Some(transport_by_shortest_paths(&supply, &demand, &cost))
}

fn ngrams<T: PartialEq + Clone>(seq: &[T], n: usize) -> Vec<Vec<T>> {
    if seq.len() < n {
        return Vec::new();
    }
    (0..=seq.len() - n).map(|i| seq[i..i + n].to_vec()).collect()
}

/// Clipped matches by linear scans, and the candidate n-gram count.
pub fn naive_clipped<T: PartialEq + Clone>(candidate: &[T], reference: &[T], n: usize) -> (u64, u64) {
    let cand = ngrams(candidate, n);
    let refs = ngrams(reference, n);
    let mut seen: Vec<&Vec<T>> = Vec::new();
    let mut matches = 0;
    for g in &cand {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let in_cand = cand.iter().filter(|h| *h == g).count() as u64;
        let in_ref = refs.iter().filter(|h| *h == g).count() as u64;
        matches += in_cand.min(in_ref);
    }
    (matches, cand.len() as u64)
}

/// Sentence BLEU with add-one smoothing on orders two and up, applied
/// whenever some order has no match, times `brevity`.
pub fn naive_smoothed_bleu<T: PartialEq + Clone>(
    candidate: &[T],
    reference: &[T],
    weights: &[f64],
    brevity: f64,
) -> f64 {
    let counts: Vec<(u64, u64)> = (1..=weights.len())
        .map(|n| naive_clipped(candidate, reference, n))
        .collect();
    let smooth = counts.iter().any(|c| c.0 == 0);
    let mut log_sum = 0.0;
    for (n, (&(m, t), w)) in counts.iter().zip(weights).enumerate() {
        let p = match (n, smooth, t) {
            (1.., true, _) => (m + 1) as f64 / (t + 1) as f64,
            (_, _, 0) => 0.0,
            _ => m as f64 / t as f64,
        };
        log_sum += w * p.ln();
    }
    brevity * log_sum.exp()
}

/// `min(1, exp(1 − T/c))`.
pub fn naive_bp_t(c: usize, max_len: usize) -> f64 {
    let x = (1.0 - max_len as f64 / c as f64).exp();
    if x > 1.0 {
        1.0
    } else {
        x
    }
}

/// BLEU with the max-length brevity penalty; `None` when either side is empty.
pub fn naive_bleu_t<T: PartialEq + Clone>(
    candidate: &[T],
    reference: &[T],
    weights: &[f64],
    max_len: usize,
) -> Option<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return None;
    }
    Some(naive_smoothed_bleu(
        candidate,
        reference,
        weights,
        naive_bp_t(candidate.len(), max_len),
    ))
}

fn standard_bp(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// Sentence BLEU-4 in `[0, 1]`, add-one smoothed, standard brevity penalty.
pub fn naive_sentence_bleu4<T: PartialEq + Clone>(candidate: &[T], reference: &[T]) -> f64 {
    let bp = standard_bp(candidate.len(), reference.len());
    if bp == 0.0 {
        return 0.0;
    }
    naive_smoothed_bleu(candidate, reference, &[0.25; 4], bp)
}

/// Corpus BLEU-4 on the 0..=100 scale from summed clipped counts.
pub fn naive_corpus_bleu4<T: PartialEq + Clone>(pairs: &[(Vec<T>, Vec<T>)]) -> f64 {
    let mut m = [0u64; 4];
    let mut t = [0u64; 4];
    let (mut c, mut r) = (0, 0);
    for (cand, reference) in pairs {
        for n in 1..=4 {
            let (a, b) = naive_clipped(cand, reference, n);
            m[n - 1] += a;
            t[n - 1] += b;
        }
        c += cand.len();
        r += reference.len();
    }
    if m.contains(&0) {
        return 0.0;
    }
    let product: f64 = (0..4).map(|n| m[n] as f64 / t[n] as f64).product();
    100.0 * standard_bp(c, r) * product.powf(0.25)
}

/// Argmin of `d(i, j)` over a `rows × cols` grid, `None` sorting after every
/// value. Ties: higher `score[i]`, then lower `i`, then lower `j`.
pub fn pair_argmin<D>(rows: usize, cols: usize, scores: &[f64], d: D) -> (usize, usize)
where
    D: Fn(usize, usize) -> Option<f64>,
{
    let key = |v: Option<f64>| v.map_or((1, 0.0), |x| (0, x));
    let mut best = (0, 0);
    let mut best_key = key(d(0, 0));
    for i in 0..rows {
        for j in 0..cols {
            let k = key(d(i, j));
            let (bi, _) = best;
            let better = k.0 < best_key.0
                || (k.0 == best_key.0 && k.1 < best_key.1)
                || (k == best_key && scores[i] > scores[bi]);
            if better {
                best = (i, j);
                best_key = k;
            }
        }
    }
    best
}
