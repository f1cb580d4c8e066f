use rand::seq::index::sample;
use rand::Rng;

use super::TrainError;
use crate::rng::seeded_rng;
use crate::tokenizer::{EncodedPair, TokenId, Vocabulary, MASK_ID, RESERVED};

/// Label value at positions that carry no prediction target.
pub const IGNORE_LABEL: i64 = -100;

/// How many tokens to select and what to do with them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingPolicy {
    pub select_fraction: f64,
    pub mask_fraction: f64,
    pub random_fraction: f64,
    pub keep_fraction: f64,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        Self {
            select_fraction: 0.15,
            mask_fraction: 0.8,
            random_fraction: 0.1,
            keep_fraction: 0.1,
        }
    }
}

impl MaskingPolicy {
    pub fn validate(&self) -> Result<(), TrainError> {
        let parts = [
            self.select_fraction,
            self.mask_fraction,
            self.random_fraction,
            self.keep_fraction,
        ];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(TrainError::Masking(format!("fractions {parts:?} must lie in [0, 1]")));
        }
        let total = self.mask_fraction + self.random_fraction + self.keep_fraction;
        if (total - 1.0).abs() > 1e-9 {
            return Err(TrainError::Masking(format!(
                "mask + random + keep = {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Round-half-up of `select_fraction · eligible`, at least 1 when anything is eligible.
    pub fn selected_count(&self, eligible: usize) -> usize {
        if eligible == 0 {
            return 0;
        }
        let n = (self.select_fraction * eligible as f64 + 0.5).floor() as usize;
        n.clamp(1, eligible)
    }
}

/// Input ids after masking and the per-position prediction targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPair {
    pub ids: Vec<TokenId>,
    /// Original id at selected positions, [`IGNORE_LABEL`] elsewhere.
    pub labels: Vec<i64>,
}

pub fn mask_tokens(
    pair: &EncodedPair,
    policy: &MaskingPolicy,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<MaskedPair, TrainError> {
    policy.validate()?;
    let mut ids = pair.ids.clone();
    let mut labels = vec![IGNORE_LABEL; ids.len()];
    let eligible: Vec<usize> = (0..ids.len())
        .filter(|&i| pair.attention_mask.get(i) == Some(&1) && !Vocabulary::is_special(ids[i]))
        .collect();
    let count = policy.selected_count(eligible.len());
    if count == 0 {
        return Ok(MaskedPair { ids, labels });
    }
    let first_regular = RESERVED.len() as TokenId;
    let vocab_len = vocab.len() as TokenId;
    let mut rng = seeded_rng(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, eligible.len(), count)
        .into_iter()
        .map(|k| eligible[k])
        .collect();
    chosen.sort_unstable();
    for pos in chosen {
        labels[pos] = i64::from(ids[pos]);
        let r: f64 = rng.random();
        if r < policy.mask_fraction {
            ids[pos] = MASK_ID;
        } else if r < policy.mask_fraction + policy.random_fraction && vocab_len > first_regular {
            ids[pos] = rng.random_range(first_regular..vocab_len);
        }
    }
    Ok(MaskedPair { ids, labels })
}
