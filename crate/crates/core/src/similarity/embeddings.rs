use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Word vectors of one fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries. Duplicate words keep their first vector.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (word, vector) in entries {
            let d = *dim.get_or_insert(vector.len());
            if d == 0 || vector.len() != d {
                return Err(Error::InvalidParameter(format!(
                    "vector for {word:?} has dimension {}, expected {d}",
                    vector.len()
                )));
            }
            vectors.entry(word).or_insert(vector);
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), &path.display().to_string())
    }

    /// Reads the text vector format: an optional `count dim` header, then
    /// `word v1 .. vd` per line. Blank lines are skipped.
    pub fn read_from<R: BufRead>(reader: R, origin: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut vectors = HashMap::new();
        let mut first = true;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if std::mem::take(&mut first) && fields.len() == 2 {
                if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    if d == 0 {
                        return Err(Error::parse(origin, lineno, "header declares dimension 0"));
                    }
                    dim = Some(d);
                    continue;
                }
            }
            let word = fields[0];
            let vector = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::parse(origin, lineno, format!("unparsable value {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let expected = *dim.get_or_insert(vector.len());
            if vector.is_empty() || vector.len() != expected {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("dimension {} does not match {expected}", vector.len()),
                ));
            }
            vectors.entry(word.to_string()).or_insert(vector);
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|(w, v)| (w.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }
}

/// Words removed before computing WMD.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The English list shipped with the crate.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and surrounding whitespace are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines_no_header() {
        let table = EmbeddingTable::read_from(&b"cat 1 2 3\ndog 4 5 6\n"[..], "e").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 3);
        assert_eq!(table.get("dog"), Some(&[4.0, 5.0, 6.0][..]));
        assert_eq!(table.get("cow"), None);
    }

    #[test]
    fn header_is_consumed() {
        let table = EmbeddingTable::read_from(&b"2 2\ncat 1 2\ndog 3 4\n"[..], "e").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 2);
        assert!(table.get("2").is_none());
    }

    #[test]
    fn dimension_mismatch_names_the_line() {
        let text = b"a 1 2\nb 1 2\nc 1 2\nd 1 2\ne 1 2 3\n";
        let err = EmbeddingTable::read_from(&text[..], "e").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = EmbeddingTable::read_from(&b"a 1 x\n"[..], "e").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicates_keep_first() {
        let table = EmbeddingTable::read_from(&b"a 1\na 2\n"[..], "e").unwrap();
        assert_eq!(table.get("a"), Some(&[1.0][..]));
    }

    #[test]
    fn shipped_stopwords() {
        let sw = StopWords::english();
        assert!(sw.contains("the"));
        assert!(sw.contains("i"));
        assert!(!sw.contains("cats"));
    }
}
