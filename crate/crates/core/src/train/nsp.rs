use rand::Rng;

use super::TrainError;
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NspPair {
    pub sentence_a: String,
    pub sentence_b: String,
    pub is_next: bool,
}

/// One pair per adjacent sentence pair; with probability `positive_probability`
/// the true successor, otherwise a random sentence from a different document.
pub fn make_nsp_pairs<S: AsRef<str>>(
    documents: &[Vec<S>],
    positive_probability: f64,
    seed: u64,
) -> Result<Vec<NspPair>, TrainError> {
    if !(0.0..=1.0).contains(&positive_probability) {
        return Err(TrainError::Nsp(format!(
            "probability {positive_probability} outside [0, 1]"
        )));
    }
    if let Some(d) = documents.iter().position(|d| d.len() < 2) {
        return Err(TrainError::Nsp(format!("document {d} has fewer than 2 sentences")));
    }
    if documents.len() < 2 && positive_probability < 1.0 {
        return Err(TrainError::Nsp("negative pairs need at least 2 documents".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut pairs = Vec::new();
    for (d, doc) in documents.iter().enumerate() {
        for window in doc.windows(2) {
            let is_next = positive_probability >= 1.0 || rng.random::<f64>() < positive_probability;
            let sentence_b = if is_next {
                window[1].as_ref()
            } else {
                let mut other = rng.random_range(0..documents.len() - 1);
                if other >= d {
                    other += 1;
                }
                let doc_b = &documents[other];
                doc_b[rng.random_range(0..doc_b.len())].as_ref()
            };
            pairs.push(NspPair {
                sentence_a: window[0].as_ref().to_string(),
                sentence_b: sentence_b.to_string(),
                is_next,
            });
        }
    }
    Ok(pairs)
}
