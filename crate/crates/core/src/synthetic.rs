//! Seeded toy dialogue corpus and matching word vectors.
//!
//! Prompts end with a topic word and each reply mixes several templates
//! filled with topic-specific adjectives, so a trigram model conditioned on
//! the prompt has something to learn and beams contain competing replies.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOPICS: [&str; 16] = [
    "cats", "dogs", "pizza", "movies", "football", "coffee", "books", "trains", "jazz", "chess", "tea", "boats",
    "gardens", "robots", "songs", "games",
];

const ADJECTIVES: [&str; 12] = [
    "good", "bad", "great", "boring", "fun", "loud", "quiet", "cheap", "nice", "strange", "warm", "cold",
];

const PROMPTS: [&str; 4] = [
    "do you like {t}",
    "what about {t}",
    "tell me about {t}",
    "have you seen {t}",
];

const REPLIES: [&str; 5] = [
    "i like {t} , they are {a} .",
    "{t} are {a} and {b} !",
    "no , i think {t} are {a} .",
    "yes , {t} are really {a} .",
    "well , {t} are {a} but {b} .",
];

/// Reply-template preferences per prompt template.
const REPLY_WEIGHTS: [[u32; 5]; 4] = [[5, 1, 3, 4, 1], [1, 5, 2, 1, 3], [2, 4, 1, 1, 4], [4, 1, 2, 5, 1]];

fn topic_adjectives(topic: usize) -> [&'static str; 3] {
    [
        ADJECTIVES[topic % ADJECTIVES.len()],
        ADJECTIVES[(topic * 5 + 3) % ADJECTIVES.len()],
        ADJECTIVES[(topic * 7 + 8) % ADJECTIVES.len()],
    ]
}

/// `count` (prompt, reply) pairs, identical for identical seeds.
pub fn dialogue_corpus(count: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let topic = rng.gen_range(0..TOPICS.len());
            let prompt = rng.gen_range(0..PROMPTS.len());
            let weights = REPLY_WEIGHTS[prompt];
            let total: u32 = weights.iter().sum();
            let mut pick = rng.gen_range(0..total);
            let reply = weights
                .iter()
                .position(|&w| {
                    if pick < w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .expect("pick is below the weight total");
            let adjectives = topic_adjectives(topic);
            let a = adjectives.choose(&mut rng).expect("non-empty");
            let b = adjectives.choose(&mut rng).expect("non-empty");
            let source = PROMPTS[prompt].replace("{t}", TOPICS[topic]);
            let target = REPLIES[reply]
                .replace("{t}", TOPICS[topic])
                .replace("{a}", a)
                .replace("{b}", b);
            (source, target)
        })
        .collect()
}

/// Every word the generator can emit, sorted.
pub fn lexicon() -> Vec<String> {
    let mut words: Vec<String> = PROMPTS
        .iter()
        .chain(REPLIES.iter())
        .flat_map(|t| t.split_whitespace())
        .filter(|w| !w.starts_with('{'))
        .chain(TOPICS.iter().copied())
        .chain(ADJECTIVES.iter().copied())
        .map(str::to_string)
        .collect();
    words.sort();
    words.dedup();
    words
}

/// Word vectors for [`lexicon`]: topics and adjectives are drawn around two
/// separate centroids so that topical words sit closer to one another.
pub fn embeddings(dim: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut centroid = |scale: f64| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-scale..scale)).collect() };
    let topic_center = centroid(2.0);
    let adjective_center = centroid(2.0);
    let other_center = centroid(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lexicon()
        .into_iter()
        .map(|word| {
            let center = if TOPICS.contains(&word.as_str()) {
                &topic_center
            } else if ADJECTIVES.contains(&word.as_str()) {
                &adjective_center
            } else {
                &other_center
            };
            let vector = center.iter().map(|c| c + rng.gen_range(-1.0..1.0)).collect();
            (word, vector)
        })
        .collect()
}

/// Text vector format with a `count dim` header line.
pub fn write_embeddings<W: Write>(entries: &[(String, Vec<f64>)], mut out: W) -> std::io::Result<()> {
    let dim = entries.first().map_or(0, |(_, v)| v.len());
    writeln!(out, "{} {dim}", entries.len())?;
    for (word, vector) in entries {
        write!(out, "{word}")?;
        for x in vector {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn deterministic_and_tokenizable() {
        let a = dialogue_corpus(50, 4);
        assert_eq!(a, dialogue_corpus(50, 4));
        assert_ne!(a, dialogue_corpus(50, 5));
        let lex = lexicon();
        for (s, t) in &a {
            for w in tokenize(s).iter().chain(&tokenize(t)) {
                assert!(lex.binary_search(w).is_ok(), "{w} missing from lexicon");
            }
        }
    }

    #[test]
    fn embeddings_cover_lexicon() {
        let e = embeddings(6, 1);
        assert_eq!(e.len(), lexicon().len());
        assert!(e.iter().all(|(_, v)| v.len() == 6));
    }
}
