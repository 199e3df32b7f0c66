//! Run configuration: built-in defaults, then a `key=value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bidibeam::corpus::{CorpusFormat, SplitFractions};
use bidibeam::similarity::BpMode;
use bidibeam::{NGramConfig, SearchParams};

use crate::error::CliError;

pub const RESOLVED_CONFIG: &str = "config.resolved";

/// Decoding algorithm as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgorithmChoice {
    Vbs,
    Bidis,
    BidiaBleu,
    BidiaWmd,
}

impl AlgorithmChoice {
    pub const ALL: [AlgorithmChoice; 4] = [Self::Vbs, Self::Bidis, Self::BidiaBleu, Self::BidiaWmd];

    pub fn is_agreement(self) -> bool {
        matches!(self, Self::BidiaBleu | Self::BidiaWmd)
    }
}

impl fmt::Display for AlgorithmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vbs => "vbs",
            Self::Bidis => "bidis",
            Self::BidiaBleu => "bidia-bleu",
            Self::BidiaWmd => "bidia-wmd",
        })
    }
}

impl FromStr for AlgorithmChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected vbs, bidis, bidia-bleu or bidia-wmd)"))
    }
}

/// Every key with its default; an empty default means "unset".
const DEFAULTS: &[(&str, &str)] = &[
    ("B", "10"),
    ("T", "20"),
    ("algorithm", "vbs"),
    ("algorithms", "vbs,bidis,bidia-bleu,bidia-wmd"),
    ("alpha", "0.6"),
    ("bp-mode", "divide"),
    ("corpus", ""),
    ("count", "500"),
    ("decodes", ""),
    ("dim", "16"),
    ("embeddings", ""),
    ("format", ""),
    ("jobs", "1"),
    ("k", "0.1"),
    ("lambda", ""),
    ("lambda-grid", "0,0.25,0.5,1,2,4"),
    ("min-count", "1"),
    ("models", ""),
    ("nb", "2,4,8"),
    ("order", "3"),
    ("out", ""),
    ("persist-beams", "false"),
    ("seed", "1"),
    ("split", "0.97,0.01,0.02"),
    ("stopwords", ""),
    ("timing", "false"),
    ("top-k", "50"),
    ("weights", ""),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: CorpusFormat,
    pub split: SplitFractions,
    pub seed: u64,
    pub ngram: NGramConfig,
    pub min_count: usize,
    pub search: SearchParams,
    pub algorithm: AlgorithmChoice,
    pub algorithms: Vec<AlgorithmChoice>,
    pub lambda: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub bp_mode: BpMode,
    pub nb: Vec<usize>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub decodes: Option<PathBuf>,
    pub persist_beams: bool,
    pub timing: bool,
    pub count: usize,
    pub dim: usize,
    pub top_k: usize,
    /// Effective `key=value` pairs, echoed next to every output.
    values: BTreeMap<String, String>,
}

/// Reads a `key=value` file. Blank lines and lines starting with `#` are ignored.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}:{}: expected key=value", path.display(), idx + 1)))?;
        let key = key.trim();
        if !DEFAULTS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown key {key:?}",
                path.display(),
                idx + 1
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("invalid {key}={value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Layers `file` over the defaults and `flags` over both.
    pub fn resolve(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (key, value) in file.into_iter().chain(flags) {
            if !values.contains_key(&key) {
                return Err(CliError::Config(format!("unknown key {key:?}")));
            }
            values.insert(key, value);
        }
        let get = |key: &str| values[key].as_str();

        let corpus = optional_path(get("corpus"));
        let format = match get("format") {
            "" => match corpus.as_ref().and_then(|p| p.extension()) {
                Some(ext) if ext == "jsonl" => CorpusFormat::Jsonl,
                _ => CorpusFormat::Tsv,
            },
            other => parse("format", other)?,
        };

        let split: Vec<f64> = parse_list("split", get("split"))?;
        let [train, validation, test] = split[..] else {
            return Err(CliError::Config(
                "split needs three fractions: train,validation,test".into(),
            ));
        };
        let split = SplitFractions {
            train,
            validation,
            test,
        };
        split.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let order: usize = parse("order", get("order"))?;
        let weights: Vec<f64> = match get("weights") {
            "" if order == 3 => NGramConfig::default().weights,
            "" => vec![1.0 / order.max(1) as f64; order],
            w => parse_list("weights", w)?,
        };
        let ngram = NGramConfig {
            order,
            weights,
            k: parse("k", get("k"))?,
        };
        ngram.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let search =
            SearchParams::new(parse("B", get("B"))?, parse("T", get("T"))?).with_alpha(parse("alpha", get("alpha"))?);
        search.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let lambda = match get("lambda") {
            "" => None,
            v => Some(parse::<f64>("lambda", v)?),
        };
        if lambda.is_some_and(|l| !(l.is_finite() && l >= 0.0)) {
            return Err(CliError::Config("lambda must be a non-negative number".into()));
        }
        let mut lambda_grid: Vec<f64> = parse_list("lambda-grid", get("lambda-grid"))?;
        if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(CliError::Config("lambda-grid needs non-negative numbers".into()));
        }
        lambda_grid.sort_by(f64::total_cmp);
        lambda_grid.dedup();

        let nb: Vec<usize> = parse_list("nb", get("nb"))?;
        if nb.is_empty() || nb.contains(&0) {
            return Err(CliError::Config("nb needs positive beam sizes".into()));
        }
        let algorithms: Vec<AlgorithmChoice> = parse_list("algorithms", get("algorithms"))?;
        if algorithms.is_empty() {
            return Err(CliError::Config("algorithms is empty".into()));
        }

        let positive = |key: &str| -> Result<usize, CliError> {
            let v: usize = parse(key, get(key))?;
            if v == 0 {
                return Err(CliError::Config(format!("{key} must be at least 1")));
            }
            Ok(v)
        };

        let config = Self {
            corpus,
            format,
            split,
            seed: parse("seed", get("seed"))?,
            ngram,
            min_count: positive("min-count")?,
            search,
            algorithm: parse("algorithm", get("algorithm"))?,
            algorithms,
            lambda,
            lambda_grid,
            embeddings: optional_path(get("embeddings")),
            stopwords: optional_path(get("stopwords")),
            bp_mode: parse("bp-mode", get("bp-mode"))?,
            nb,
            jobs: parse("jobs", get("jobs"))?,
            out: optional_path(get("out")),
            models: optional_path(get("models")),
            decodes: optional_path(get("decodes")),
            persist_beams: parse("persist-beams", get("persist-beams"))?,
            timing: parse("timing", get("timing"))?,
            count: positive("count")?,
            dim: positive("dim")?,
            top_k: positive("top-k")?,
            values: BTreeMap::new(),
        };
        Ok(config.with_echo())
    }

    /// Rebuilds the echoed values from the typed fields.
    fn with_echo(mut self) -> Self {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let v = &mut self.values;
        v.clear();
        v.insert("B".into(), self.search.beam_size.to_string());
        v.insert("T".into(), self.search.max_len.to_string());
        v.insert("algorithm".into(), self.algorithm.to_string());
        v.insert("algorithms".into(), join(&self.algorithms));
        v.insert("alpha".into(), self.search.alpha.to_string());
        v.insert("bp-mode".into(), self.bp_mode.to_string());
        v.insert("corpus".into(), path(&self.corpus));
        v.insert("count".into(), self.count.to_string());
        v.insert("decodes".into(), path(&self.decodes));
        v.insert("dim".into(), self.dim.to_string());
        v.insert("embeddings".into(), path(&self.embeddings));
        v.insert("format".into(), self.format.to_string());
        v.insert("jobs".into(), self.jobs.to_string());
        v.insert("k".into(), self.ngram.k.to_string());
        v.insert("lambda".into(), self.lambda.map(|l| l.to_string()).unwrap_or_default());
        v.insert("lambda-grid".into(), join(&self.lambda_grid));
        v.insert("min-count".into(), self.min_count.to_string());
        v.insert("models".into(), path(&self.models));
        v.insert("nb".into(), join(&self.nb));
        v.insert("order".into(), self.ngram.order.to_string());
        v.insert("out".into(), path(&self.out));
        v.insert("persist-beams".into(), self.persist_beams.to_string());
        v.insert("seed".into(), self.seed.to_string());
        v.insert(
            "split".into(),
            join(&[self.split.train, self.split.validation, self.split.test]),
        );
        v.insert("stopwords".into(), path(&self.stopwords));
        v.insert("timing".into(), self.timing.to_string());
        v.insert("top-k".into(), self.top_k.to_string());
        v.insert("weights".into(), join(&self.ngram.weights));
        self
    }

    /// Records a value chosen during the run (such as a validated lambda).
    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = Some(lambda);
        self.values.insert("lambda".into(), lambda.to_string());
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("--out is required".into()))
    }

    pub fn require_corpus(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::Config("--corpus is required".into()))
    }

    /// Model directory: `--models`, falling back to `--out`.
    pub fn model_dir(&self) -> Result<&Path, CliError> {
        self.models
            .as_deref()
            .or(self.out.as_deref())
            .ok_or_else(|| CliError::Config("--models (or --out) is required".into()))
    }

    /// `key=value` lines, sorted by key.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, self.render()).map_err(|e| CliError::io(&path, e))
    }
}
