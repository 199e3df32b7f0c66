use std::fs;

use bidibeam::corpus::{load_corpus, write_tsv, CorpusFormat, CorpusSplit, SplitFractions, SurfacePair};
use bidibeam::similarity::EmbeddingTable;
use bidibeam::synthetic;
use bidibeam::{ConditionalNGramLm, Direction, Error, LanguageModel, NGramConfig, TokenId, Vocabulary};

fn synthetic_pairs(count: usize) -> Vec<SurfacePair> {
    synthetic::dialogue_corpus(count, 3)
        .iter()
        .map(|(s, t)| SurfacePair::from_text(s, t))
        .collect()
}

#[test]
fn corpus_round_trips_through_tsv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = synthetic_pairs(40);
    let tsv = dir.path().join("c.tsv");
    write_tsv(&pairs, fs::File::create(&tsv).unwrap()).unwrap();
    assert_eq!(load_corpus(&tsv, CorpusFormat::Tsv).unwrap(), pairs);

    let jsonl = dir.path().join("c.jsonl");
    let lines: Vec<String> = pairs
        .iter()
        .map(|p| serde_json::json!({"source": p.source.join(" "), "target": p.target.join(" ")}).to_string())
        .collect();
    fs::write(&jsonl, lines.join("\n") + "\n").unwrap();
    assert_eq!(load_corpus(&jsonl, CorpusFormat::Jsonl).unwrap(), pairs);
}

#[test]
fn corpus_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tsv");
    fs::write(&path, "hello\tthere\nno tab here\n").unwrap();
    match load_corpus(&path, CorpusFormat::Tsv).unwrap_err() {
        Error::Parse { path: p, line, .. } => {
            assert_eq!(line, 2);
            assert!(p.ends_with("bad.tsv"));
        }
        other => panic!("unexpected {other}"),
    }
    assert!(matches!(
        load_corpus(&dir.path().join("missing.tsv"), CorpusFormat::Tsv),
        Err(Error::Io { .. })
    ));
}

#[test]
fn vocabulary_and_models_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = synthetic_pairs(120);
    let vocab = Vocabulary::build(&pairs, 1).unwrap();
    let vocab_path = dir.path().join("vocab.txt");
    vocab.save(&vocab_path).unwrap();
    let loaded_vocab = Vocabulary::load(&vocab_path).unwrap();
    assert_eq!(loaded_vocab, vocab);

    let encoded: Vec<_> = pairs.iter().map(|p| vocab.encode_pair(p).unwrap()).collect();
    for direction in [Direction::Regular, Direction::Reverse] {
        let lm = ConditionalNGramLm::train(&encoded, vocab.len(), direction, NGramConfig::default()).unwrap();
        let path = dir.path().join(format!("{direction}.lm"));
        lm.save(&path).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded = ConditionalNGramLm::load(&path, vocab.len()).unwrap();
        assert_eq!(loaded, lm);
        loaded.save(&path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);

        let source = encoded[0].source();
        let prefix = &encoded[1].target()[..1];
        let a = lm.next_token_logprobs(source, prefix).unwrap();
        let b = loaded.next_token_logprobs(source, prefix).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );

        assert!(ConditionalNGramLm::load(&path, vocab.len() + 1).is_err());
    }
}

#[test]
fn split_is_disjoint_exhaustive_and_seeded() {
    let items: Vec<usize> = (0..500).collect();
    let split = CorpusSplit::new(items.clone(), SplitFractions::default(), 9).unwrap();
    assert_eq!(split.validation.len(), 5);
    assert_eq!(split.test.len(), 10);
    let mut all: Vec<usize> = split
        .train
        .iter()
        .chain(&split.validation)
        .chain(&split.test)
        .copied()
        .collect();
    all.sort();
    assert_eq!(all, items);
    assert_eq!(
        CorpusSplit::new(items.clone(), SplitFractions::default(), 9).unwrap(),
        split
    );
    assert_ne!(
        CorpusSplit::new(items, SplitFractions::default(), 10).unwrap().train,
        split.train
    );
}

#[test]
fn synthetic_embeddings_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.txt");
    let entries = synthetic::embeddings(8, 4);
    synthetic::write_embeddings(&entries, fs::File::create(&path).unwrap()).unwrap();
    let table = EmbeddingTable::load(&path).unwrap();
    assert_eq!(table.len(), entries.len());
    assert_eq!(table.dim(), 8);
    for (word, vector) in &entries {
        assert_eq!(table.get(word).unwrap(), &vector[..]);
    }
    // Every generated word has a vector.
    let vocab = Vocabulary::build(&synthetic_pairs(300), 1).unwrap();
    for id in 4..vocab.len() as u32 {
        assert!(table.get(vocab.surface(TokenId(id)).unwrap()).is_some());
    }
}
