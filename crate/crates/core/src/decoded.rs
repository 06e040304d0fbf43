use serde::{Deserialize, Serialize};

use crate::alphabet::NUM_CLASSES;
use crate::lexicon::CharProbTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Segmentation,
    Sam,
}

/// Output of either recognizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedText {
    pub text: String,
    /// One confidence per character of `text`.
    pub char_scores: Vec<f64>,
    pub confidence: f64,
    pub source: Source,
    /// Per-step (or per-region) probability rows over all 37 classes. For the
    /// attention decoder the final EOS step is included when one was emitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_probs: Option<Vec<Vec<f64>>>,
}

impl DecodedText {
    pub fn empty(source: Source) -> Self {
        Self {
            text: String::new(),
            char_scores: Vec::new(),
            confidence: 0.0,
            source,
            step_probs: None,
        }
    }

    /// Character-probability rows (36 classes, background/EOS dropped), one
    /// per decoded character. Falls back to one-hot rows of the decoded text
    /// when no probabilities were kept.
    pub fn char_prob_table(&self) -> CharProbTable {
        match &self.step_probs {
            Some(rows) if rows.len() >= self.text.chars().count() && rows.iter().all(|r| r.len() == NUM_CLASSES) => {
                let rows = rows
                    .iter()
                    .take(self.text.chars().count())
                    .map(|r| r[1..].to_vec())
                    .collect();
                CharProbTable::new(rows).unwrap_or_else(|_| CharProbTable::one_hot(&self.text))
            }
            _ => CharProbTable::one_hot(&self.text),
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
