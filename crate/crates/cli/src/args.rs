use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "bidibeam",
    version,
    about = "Bidirectional beam search: train, decode, sweep and analyze"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a corpus and train the regular and reverse n-gram models.
    Train(Overrides),
    /// Decode the test split with one algorithm.
    Decode(Overrides),
    /// Decode the test split for every algorithm and beam size.
    Sweep(Overrides),
    /// Rank histograms, best-hypothesis BLEU and word-position statistics.
    Analyze(Overrides),
    /// Size, length and word-position statistics of a corpus.
    CorpusStats(Overrides),
    /// Write a synthetic dialogue corpus and matching word vectors.
    Synth(Overrides),
}

impl Command {
    pub fn overrides(&self) -> &Overrides {
        match self {
            Self::Train(o)
            | Self::Decode(o)
            | Self::Sweep(o)
            | Self::Analyze(o)
            | Self::CorpusStats(o)
            | Self::Synth(o) => o,
        }
    }
}

/// Every setting can also come from `--config`; flags take precedence.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat key=value file with any of the settings below.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Corpus file (TSV or JSONL).
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<String>,
    /// Corpus format: tsv or jsonl (default: from the file extension).
    #[arg(long)]
    pub format: Option<String>,
    /// Train, validation and test fractions.
    #[arg(long, value_name = "F,F,F")]
    pub split: Option<String>,
    /// Seed for the split and synthetic data.
    #[arg(long)]
    pub seed: Option<String>,

    /// n-gram order.
    #[arg(long)]
    pub order: Option<String>,
    /// Interpolation weights, lowest order first.
    #[arg(long, value_name = "W,..")]
    pub weights: Option<String>,
    /// Additive smoothing constant.
    #[arg(long)]
    pub k: Option<String>,
    /// Words seen fewer times map to <unk>.
    #[arg(long = "min-count")]
    pub min_count: Option<String>,

    /// Beam size.
    #[arg(long = "B", value_name = "B")]
    pub beam_size: Option<String>,
    /// Maximum hypothesis length, EOS included.
    #[arg(long = "T", value_name = "T")]
    pub max_len: Option<String>,
    /// Length-penalty exponent.
    #[arg(long)]
    pub alpha: Option<String>,
    /// vbs, bidis, bidia-bleu or bidia-wmd.
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Algorithms included in a sweep.
    #[arg(long, value_name = "A,..")]
    pub algorithms: Option<String>,
    /// Fixed reverse-model weight; chosen on the validation split when absent.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Candidate lambdas tried on the validation split.
    #[arg(long = "lambda-grid", value_name = "L,..")]
    pub lambda_grid: Option<String>,
    /// Word vectors for bidia-wmd.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<String>,
    /// Stopword list, one per line (default: built-in English list).
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<String>,
    /// divide or multiply.
    #[arg(long = "bp-mode")]
    pub bp_mode: Option<String>,
    /// Beam sizes for a sweep.
    #[arg(long, value_name = "N,..")]
    pub nb: Option<String>,

    /// Worker threads for decoding.
    #[arg(long)]
    pub jobs: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Directory written by `train` (default: --out).
    #[arg(long, value_name = "DIR")]
    pub models: Option<String>,
    /// Decode CSV, or a directory of them, for `analyze`.
    #[arg(long, value_name = "PATH")]
    pub decodes: Option<String>,
    /// Also write every beam next to the decode CSV.
    #[arg(long = "persist-beams", num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub persist_beams: Option<String>,
    /// Add wall-clock times to the complexity CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub timing: Option<String>,
    /// Number of synthetic pairs.
    #[arg(long)]
    pub count: Option<String>,
    /// Dimension of synthetic word vectors.
    #[arg(long)]
    pub dim: Option<String>,
    /// Words kept per word-position table.
    #[arg(long = "top-k")]
    pub top_k: Option<String>,
}

impl Overrides {
    /// Flags that were given, keyed like the config file.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let fields: [(&str, &Option<String>); 28] = [
            ("corpus", &self.corpus),
            ("format", &self.format),
            ("split", &self.split),
            ("seed", &self.seed),
            ("order", &self.order),
            ("weights", &self.weights),
            ("k", &self.k),
            ("min-count", &self.min_count),
            ("B", &self.beam_size),
            ("T", &self.max_len),
            ("alpha", &self.alpha),
            ("algorithm", &self.algorithm),
            ("algorithms", &self.algorithms),
            ("lambda", &self.lambda),
            ("lambda-grid", &self.lambda_grid),
            ("embeddings", &self.embeddings),
            ("stopwords", &self.stopwords),
            ("bp-mode", &self.bp_mode),
            ("nb", &self.nb),
            ("jobs", &self.jobs),
            ("out", &self.out),
            ("models", &self.models),
            ("decodes", &self.decodes),
            ("persist-beams", &self.persist_beams),
            ("timing", &self.timing),
            ("count", &self.count),
            ("dim", &self.dim),
            ("top-k", &self.top_k),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}
