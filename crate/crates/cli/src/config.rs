use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{read_text, CliError, Result};

pub const SEED_ENV: &str = "ASPECTFORGE_SEED";
pub const SNAPSHOT_NAME: &str = "run.cfg";

/// Fully resolved settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Prebuilt vocabulary; one is learned from the training split otherwise.
    pub vocab: Option<PathBuf>,
    pub vocab_size: usize,
    pub enrich: bool,
    pub max_aux_tokens: usize,
    pub length_filter: String,
    pub train_fraction: f64,
    pub group_by_review: bool,
    pub preset: String,
    pub max_len: usize,
    pub seed: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch: usize,
    pub epochs: usize,
    /// `balanced` or seven comma-separated weights.
    pub class_weights: Option<String>,
    pub eval_every: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = aspectforge_core::train::TrainConfig::default();
        Self {
            dataset: None,
            lexicon: None,
            vocab: None,
            vocab_size: 8000,
            enrich: true,
            max_aux_tokens: aspectforge_core::lexicon::DEFAULT_MAX_TOKENS,
            length_filter: aspectforge_core::corpus::LengthPolicy::default().to_string(),
            train_fraction: 0.8,
            group_by_review: true,
            preset: "toy".into(),
            max_len: aspectforge_core::tokenizer::DEFAULT_MAX_LEN,
            seed: train.seed,
            lr: train.learning_rate,
            beta1: train.beta1,
            beta2: train.beta2,
            epsilon: train.epsilon,
            weight_decay: train.weight_decay,
            batch: train.batch_size,
            epochs: train.epochs,
            class_weights: None,
            eval_every: None,
        }
    }
}

/// One configuration source; unset fields defer to lower layers.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub dataset: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub vocab_size: Option<usize>,
    pub enrich: Option<bool>,
    pub max_aux_tokens: Option<usize>,
    pub length_filter: Option<String>,
    pub train_fraction: Option<f64>,
    pub group_by_review: Option<bool>,
    pub preset: Option<String>,
    pub max_len: Option<usize>,
    pub seed: Option<u64>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub class_weights: Option<String>,
    pub eval_every: Option<usize>,
}

macro_rules! overlay {
    ($cfg:ident, $layer:ident; $($plain:ident),*; $($optional:ident),*) => {
        $(if let Some(v) = $layer.$plain { $cfg.$plain = v; })*
        $(if $layer.$optional.is_some() { $cfg.$optional = $layer.$optional; })*
    };
}

impl RunConfig {
    pub fn apply(&mut self, layer: ConfigLayer) {
        overlay!(self, layer;
            vocab_size, enrich, max_aux_tokens, length_filter, train_fraction, group_by_review,
            preset, max_len, seed, lr, beta1, beta2, epsilon, weight_decay, batch, epochs;
            dataset, lexicon, vocab, class_weights, eval_every);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_layer(text: &str, origin: &Path) -> Result<ConfigLayer> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", origin.display(), e.message())))
}

/// defaults < `ASPECTFORGE_SEED` < config file (explicit, else the run root's
/// snapshot when present) < command-line flags.
pub fn resolve(config_file: Option<&Path>, run_root: &Path, flags: ConfigLayer) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
        config.seed = seed;
    }
    let snapshot = run_root.join(SNAPSHOT_NAME);
    let file = match config_file {
        Some(path) => Some(path.to_path_buf()),
        None => snapshot.is_file().then_some(snapshot),
    };
    if let Some(path) = file {
        config.apply(parse_layer(&read_text(&path)?, &path)?);
    }
    config.apply(flags);
    Ok(config)
}
