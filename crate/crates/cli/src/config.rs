use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use drnn::model::ModelConfig;
use drnn::sdp::AugmentMode;
use drnn::train::{DecodeStrategy, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Input files. Either `--interchange`, or `--corpus` with `--parses`
/// (and optionally `--hypernyms`).
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// SemEval-format sentences with <e1>/<e2> markers
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Dependency parses (index, form, POS, head, relation), one block per sentence
    #[arg(long)]
    pub parses: Option<PathBuf>,
    /// word<TAB>hypernym lexicon
    #[arg(long)]
    pub hypernyms: Option<PathBuf>,
    /// Pre-annotated sentences written by `ingest` or `augment`
    #[arg(long, conflicts_with_all = ["corpus", "parses", "hypernyms"])]
    pub interchange: Option<PathBuf>,
}

impl Inputs {
    fn or(self, file: Inputs) -> Inputs {
        if self.interchange.is_some() || self.corpus.is_some() || self.parses.is_some() {
            return Inputs {
                hypernyms: self.hypernyms.or(file.hypernyms),
                ..self
            };
        }
        Inputs {
            corpus: file.corpus,
            parses: file.parses,
            hypernyms: self.hypernyms.or(file.hypernyms),
            interchange: file.interchange,
        }
    }
}

/// Everything a training run depends on. Flags take precedence over the
/// `--config` file; the resolved values are written back as a snapshot.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[command(flatten)]
    #[serde(default)]
    pub inputs: Inputs,
    /// Word vectors in word2vec text format
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Train without an embedding file (uniformly initialized word vectors)
    #[arg(long, conflicts_with = "embeddings")]
    #[serde(default)]
    pub random_embeddings: bool,
    /// Use the last N training sentences for validation
    #[arg(long)]
    pub validation_size: Option<usize>,
    /// File of sentence ids (one per line) forming the validation split
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Multiple of 0.05 in [0, 0.95]
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub word_dim: Option<usize>,
    /// Dimension of the POS, relation and hypernym embeddings
    #[arg(long)]
    pub aux_dim: Option<usize>,
    #[arg(long)]
    pub penultimate_dim: Option<usize>,
    #[arg(long)]
    pub l2_lambda: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// none, all, other_only or directed_only
    #[arg(long, value_parser = parse_augment)]
    pub augment: Option<AugmentMode>,
    /// forward_only, inverse_only or sum_both
    #[arg(long, value_parser = parse_decode)]
    pub decode: Option<DecodeStrategy>,
}

fn parse_augment(s: &str) -> Result<AugmentMode, String> {
    s.parse().map_err(|e: drnn::Error| e.to_string())
}

pub fn parse_decode(s: &str) -> Result<DecodeStrategy, String> {
    s.parse().map_err(|e: drnn::Error| e.to_string())
}

pub const DEFAULT_VALIDATION_SIZE: usize = 800;

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("--config: cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            CliError::usage(format!("--config: {}: {}", path.display(), e.message()))
        })
    }

    /// Field-wise merge, `self` winning.
    pub fn or(self, file: RunConfig) -> RunConfig {
        RunConfig {
            inputs: self.inputs.or(file.inputs),
            random_embeddings: self.random_embeddings
                || (file.random_embeddings && self.embeddings.is_none()),
            embeddings: self.embeddings.or(if self.random_embeddings { None } else { file.embeddings }),
            validation_size: self.validation_size.or(file.validation_size),
            split_file: self.split_file.or(file.split_file),
            depth: self.depth.or(file.depth),
            dropout: self.dropout.or(file.dropout),
            word_dim: self.word_dim.or(file.word_dim),
            aux_dim: self.aux_dim.or(file.aux_dim),
            penultimate_dim: self.penultimate_dim.or(file.penultimate_dim),
            l2_lambda: self.l2_lambda.or(file.l2_lambda),
            batch_size: self.batch_size.or(file.batch_size),
            learning_rate: self.learning_rate.or(file.learning_rate),
            epochs: self.epochs.or(file.epochs),
            seed: self.seed.or(file.seed),
            augment: self.augment.or(file.augment),
            decode: self.decode.or(file.decode),
        }
    }

    /// Fill every unset hyperparameter with its default.
    pub fn with_defaults(self) -> RunConfig {
        let t = TrainConfig::default();
        let m = &t.model;
        RunConfig {
            validation_size: Some(self.validation_size.unwrap_or(DEFAULT_VALIDATION_SIZE)),
            depth: Some(self.depth.unwrap_or(m.depth)),
            dropout: Some(self.dropout.unwrap_or(m.dropout_rate)),
            word_dim: Some(self.word_dim.unwrap_or(m.word_dim)),
            aux_dim: Some(self.aux_dim.unwrap_or(m.aux_dim)),
            penultimate_dim: Some(self.penultimate_dim.unwrap_or(m.penultimate_dim)),
            l2_lambda: Some(self.l2_lambda.unwrap_or(m.l2_lambda)),
            batch_size: Some(self.batch_size.unwrap_or(t.batch_size)),
            learning_rate: Some(self.learning_rate.unwrap_or(t.learning_rate)),
            epochs: Some(self.epochs.unwrap_or(t.epochs)),
            seed: Some(self.seed.unwrap_or(t.seed)),
            augment: Some(self.augment.unwrap_or(t.augment)),
            decode: Some(self.decode.unwrap_or(t.decode)),
            ..self
        }
    }

    /// The training configuration; call after [`RunConfig::with_defaults`].
    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let config = TrainConfig {
            model: ModelConfig {
                depth: self.depth.expect("resolved"),
                word_dim: self.word_dim.expect("resolved"),
                aux_dim: self.aux_dim.expect("resolved"),
                penultimate_dim: self.penultimate_dim.expect("resolved"),
                dropout_rate: self.dropout.expect("resolved"),
                l2_lambda: self.l2_lambda.expect("resolved"),
                ..ModelConfig::default()
            },
            batch_size: self.batch_size.expect("resolved"),
            learning_rate: self.learning_rate.expect("resolved"),
            epochs: self.epochs.expect("resolved"),
            seed: self.seed.expect("resolved"),
            augment: self.augment.expect("resolved"),
            decode: self.decode.expect("resolved"),
            stop_on_perfect_fit: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}
