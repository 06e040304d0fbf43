//! Confidence fusion of the two recognizers and lexicon correction with
//! plain or probability-weighted edit distance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alphabet::{class_of, normalize, NUM_CHARS};
use crate::decoded::DecodedText;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconMode {
    #[default]
    None,
    /// Per-image list, typically 50 words.
    Strong,
    /// Per-dataset list.
    Weak,
    /// Large generic vocabulary.
    Generic,
}

impl FromStr for LexiconMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "strong" => Ok(Self::Strong),
            "weak" => Ok(Self::Weak),
            "generic" => Ok(Self::Generic),
            other => Err(Error::invalid(format!("unknown lexicon mode {other:?}"))),
        }
    }
}

impl fmt::Display for LexiconMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::None => "none",
            Self::Strong => "strong",
            Self::Weak => "weak",
            Self::Generic => "generic",
        };
        f.write_str(s)
    }
}

/// Ordered, normalized word list.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    words: Vec<String>,
    mode: LexiconMode,
}

impl Lexicon {
    /// Normalizes every word to lowercase alphanumerics and drops the ones
    /// that become empty. Fails when a non-`None` lexicon ends up empty.
    pub fn new<I, S>(words: I, mode: LexiconMode) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: Vec<String> = words
            .into_iter()
            .map(|w| normalize(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        if mode != LexiconMode::None && words.is_empty() {
            return Err(Error::LexiconRequired(format!("{mode} lexicon has no words")));
        }
        Ok(Self { words, mode })
    }

    pub fn none() -> Self {
        Self {
            words: Vec::new(),
            mode: LexiconMode::None,
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn mode(&self) -> LexiconMode {
        self.mode
    }
}

/// Probability rows over the 36 character classes, one per predicted
/// character.
#[derive(Debug, Clone, PartialEq)]
pub struct CharProbTable {
    rows: Vec<Vec<f64>>,
}

impl CharProbTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != NUM_CHARS {
                return Err(Error::shape(format!(
                    "probability row {i} has {} entries, expected {NUM_CHARS}",
                    row.len()
                )));
            }
            if row.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::invalid(format!("probability row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if s > 1.0 + 1e-6 {
                return Err(Error::invalid(format!("probability row {i} sums to {s}")));
            }
        }
        Ok(Self { rows })
    }

    /// Fully confident rows for `text`; characters outside the alphabet get
    /// an all-zero row.
    pub fn one_hot(text: &str) -> Self {
        let rows = text
            .chars()
            .map(|c| {
                let mut row = vec![0.0; NUM_CHARS];
                if let Some(cls) = class_of(c) {
                    row[cls - 1] = 1.0;
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn prob(&self, row: usize, class: usize) -> f64 {
        self.rows[row][class - 1]
    }
}

/// Picks the branch with strictly higher confidence; ties go to the
/// attention decoder. A missing branch defers to the other.
pub fn fuse(seg: Option<&DecodedText>, sam: Option<&DecodedText>) -> Result<DecodedText> {
    match (seg, sam) {
        (Some(s), Some(a)) => Ok(if s.confidence > a.confidence { s.clone() } else { a.clone() }),
        (Some(s), None) => Ok(s.clone()),
        (None, Some(a)) => Ok(a.clone()),
        (None, None) => Err(Error::invalid("fuse needs at least one recognition result")),
    }
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j + 1] + 1)
                .min(cur[j] + 1)
                .min(prev[j] + usize::from(ca != cb));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn classes(s: &str) -> Result<Vec<usize>> {
    s.chars()
        .map(|c| class_of(c).ok_or(Error::UnknownCharacter(c)))
        .collect()
}

/// Edit distance whose operation costs come from the predicted character
/// probabilities:
///
/// * deleting `pred[i]` costs `p_i(pred[i])`,
/// * replacing `pred[i]` by `c` costs `1 - p_i(c)`,
/// * inserting `c` before prediction row `r` (the last row at the end of the
///   string) costs `1 - p_r(c)`, or 1 when `c` is the character already
///   predicted at `r`.
///
/// Borders keep unit costs. With one-hot rows this is exactly Levenshtein.
pub fn weighted_edit_distance(pred: &str, probs: &CharProbTable, cand: &str) -> Result<f64> {
    let a = classes(pred)?;
    let b = classes(cand)?;
    if a.len() != probs.len() {
        return Err(Error::shape(format!(
            "prediction has {} characters but {} probability rows",
            a.len(),
            probs.len()
        )));
    }
    let n = a.len();
    let m = b.len();
    if n == 0 || m == 0 {
        return Ok(n.max(m) as f64);
    }
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64).collect();
    let mut cur = vec![0.0; m + 1];
    for i in 1..=n {
        cur[0] = i as f64;
        let del = probs.prob(i - 1, a[i - 1]);
        let ins_row = i.min(n - 1);
        for j in 1..=m {
            let c = b[j - 1];
            let ins = if c == a[ins_row] {
                1.0
            } else {
                1.0 - probs.prob(ins_row, c)
            };
            let rep = if a[i - 1] == c {
                0.0
            } else {
                1.0 - probs.prob(i - 1, c)
            };
            cur[j] = (prev[j] + del).min(cur[j - 1] + ins).min(prev[j - 1] + rep);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m].max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconMatch {
    pub word: String,
    pub distance: f64,
}

/// Finds the lexicon word closest to the recognized text. The first word
/// wins among equal distances. A `None`-mode lexicon returns the raw text.
pub fn match_lexicon(
    result: &DecodedText,
    probs: &CharProbTable,
    lex: &Lexicon,
    weighted: bool,
) -> Result<LexiconMatch> {
    if lex.mode() == LexiconMode::None {
        return Ok(LexiconMatch {
            word: result.text.clone(),
            distance: 0.0,
        });
    }
    if lex.words().is_empty() {
        return Err(Error::LexiconRequired(format!("{} lexicon is empty", lex.mode())));
    }
    let pred = result.text.to_ascii_lowercase();
    let plain = normalize(&pred);
    let mut best: Option<LexiconMatch> = None;
    for word in lex.words() {
        let distance = if weighted {
            weighted_edit_distance(&pred, probs, word)?
        } else {
            edit_distance(&plain, word) as f64
        };
        if best.as_ref().is_none_or(|b| distance < b.distance) {
            best = Some(LexiconMatch {
                word: word.clone(),
                distance,
            });
        }
    }
    Ok(best.expect("lexicon is non-empty"))
}
