use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::NUM_CLASSES;
use crate::tokenizer::MIN_MAX_LEN;

/// Encoder hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub feed_forward: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub type_vocab: usize,
    pub n_labels: usize,
    pub dropout: f64,
    pub layer_norm_eps: f64,
}

impl ModelConfig {
    /// 12 layers, 12 heads, hidden size 768.
    pub fn base(vocab_size: usize) -> Self {
        Self {
            layers: 12,
            heads: 12,
            hidden: 768,
            feed_forward: 3072,
            vocab_size,
            max_len: 512,
            type_vocab: 2,
            n_labels: NUM_CLASSES,
            dropout: 0.1,
            layer_norm_eps: 1e-12,
        }
    }

    /// Small CPU-trainable encoder.
    pub fn toy(vocab_size: usize) -> Self {
        Self {
            layers: 2,
            heads: 4,
            hidden: 64,
            feed_forward: 256,
            max_len: 128,
            ..Self::base(vocab_size)
        }
    }

    pub fn preset(name: &str, vocab_size: usize) -> Result<Self, ModelError> {
        match name {
            "base" => Ok(Self::base(vocab_size)),
            "toy" => Ok(Self::toy(vocab_size)),
            other => Err(ModelError::Config(format!(
                "unknown preset {other:?} (expected base or toy)"
            ))),
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Config(msg));
        if self.heads == 0 || self.hidden == 0 || !self.hidden.is_multiple_of(self.heads) {
            return fail(format!(
                "hidden size {} is not divisible by {} heads",
                self.hidden, self.heads
            ));
        }
        if self.feed_forward == 0 {
            return fail("feed-forward size must be positive".into());
        }
        if self.max_len < MIN_MAX_LEN {
            return fail(format!("max_len {} is below {MIN_MAX_LEN}", self.max_len));
        }
        if self.vocab_size == 0 {
            return fail("vocabulary is empty".into());
        }
        if self.type_vocab != 2 {
            return fail(format!("type_vocab must be 2, got {}", self.type_vocab));
        }
        if self.n_labels != NUM_CLASSES {
            return fail(format!("n_labels must be {NUM_CLASSES}, got {}", self.n_labels));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.layer_norm_eps.is_nan() || self.layer_norm_eps <= 0.0 {
            return fail("layer_norm_eps must be positive".into());
        }
        Ok(())
    }

    /// `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        format!(
            "layers={}\nheads={}\nhidden={}\nfeed_forward={}\nvocab_size={}\nmax_len={}\ntype_vocab={}\nn_labels={}\ndropout={}\nlayer_norm_eps={}\n",
            self.layers,
            self.heads,
            self.hidden,
            self.feed_forward,
            self.vocab_size,
            self.max_len,
            self.type_vocab,
            self.n_labels,
            self.dropout,
            self.layer_norm_eps
        )
    }

    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self, ModelError> {
        fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, ModelError> {
            let raw = map
                .get(key)
                .ok_or_else(|| ModelError::Checkpoint(format!("config key {key} missing")))?;
            raw.parse()
                .map_err(|_| ModelError::Checkpoint(format!("config key {key} has bad value {raw:?}")))
        }
        let config = Self {
            layers: get(map, "layers")?,
            heads: get(map, "heads")?,
            hidden: get(map, "hidden")?,
            feed_forward: get(map, "feed_forward")?,
            vocab_size: get(map, "vocab_size")?,
            max_len: get(map, "max_len")?,
            type_vocab: get(map, "type_vocab")?,
            n_labels: get(map, "n_labels")?,
            dropout: get(map, "dropout")?,
            layer_norm_eps: get(map, "layer_norm_eps")?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Exact number of trainable scalars for a configuration.
pub fn param_count(config: &ModelConfig) -> u64 {
    let h = config.hidden as u64;
    let ff = config.feed_forward as u64;
    let embeddings = (config.vocab_size as u64 + config.max_len as u64 + config.type_vocab as u64) * h + 2 * h;
    let attention = 4 * h * h + 4 * h;
    let feed_forward = 2 * h * ff + ff + h;
    let norms = 2 * (2 * h);
    let classifier = config.n_labels as u64 * h + config.n_labels as u64;
    embeddings + config.layers as u64 * (attention + feed_forward + norms) + classifier
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let base = ModelConfig::base(30_522);
        assert_eq!((base.layers, base.heads, base.hidden), (12, 12, 768));
        assert_eq!(base.feed_forward, 4 * base.hidden);
        base.validate().unwrap();
        ModelConfig::toy(100).validate().unwrap();
        assert!(ModelConfig::preset("large", 10).is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = ModelConfig {
            heads: 5,
            ..ModelConfig::toy(100)
        };
        assert!(matches!(bad.validate(), Err(ModelError::Config(_))));
        let bad = ModelConfig {
            max_len: 4,
            ..ModelConfig::toy(100)
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            dropout: 1.0,
            ..ModelConfig::toy(100)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let config = ModelConfig::toy(321);
        let map: BTreeMap<String, String> = config
            .to_kv()
            .lines()
            .map(|l| {
                let (k, v) = l.split_once('=').unwrap();
                (k.to_string(), v.to_string())
            })
            .collect();
        assert_eq!(ModelConfig::from_kv(&map).unwrap(), config);
    }

    #[test]
    fn count_for_bert_base() {
        let n = param_count(&ModelConfig::base(30_522));
        assert_eq!(n, 108_897_031);
        assert!((n as f64 - 110e6).abs() / 110e6 < 0.05);
    }

    #[test]
    fn count_degenerate_config() {
        // H=1, L=0, V=1, max_len=1: (1 + 1 + 2)·1 + 2 embedding-norm + 7 + 7 classifier = 20
        let config = ModelConfig {
            layers: 0,
            heads: 1,
            hidden: 1,
            feed_forward: 4,
            vocab_size: 1,
            max_len: 1,
            ..ModelConfig::toy(1)
        };
        assert_eq!(param_count(&config), 20);
    }

    #[test]
    fn doubling_layers_adds_whole_blocks() {
        let one = ModelConfig::toy(100);
        let two = ModelConfig {
            layers: 2 * one.layers,
            ..one.clone()
        };
        let h = one.hidden as u64;
        let block = 4 * h * h + 4 * h + 2 * h * one.feed_forward as u64 + one.feed_forward as u64 + h + 4 * h;
        assert_eq!(param_count(&two) - param_count(&one), one.layers as u64 * block);
    }
}
