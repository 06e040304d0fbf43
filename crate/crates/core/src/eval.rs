//! Detection, end-to-end and word-spotting evaluation over polygon ground
//! truth with a single IoU threshold.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::alphabet::normalize;
use crate::decoded::{DecodedText, Source};
use crate::error::{Error, Result};
use crate::geometry::{polygon_iou, Polygon};
use crate::lexicon::{match_lexicon, CharProbTable, Lexicon, LexiconMode};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtInstance {
    pub polygon: Polygon,
    #[serde(default)]
    pub transcription: String,
    #[serde(default)]
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotResult {
    pub polygon: Polygon,
    #[serde(default)]
    pub text: String,
    pub score: f64,
    /// Optional per-character rows over the 36 classes, used by weighted
    /// lexicon matching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_probs: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub pred: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub matches: Vec<Match>,
    /// Predictions absorbed by an ignored ground-truth region.
    pub excluded: Vec<usize>,
    /// Predictions that count towards precision.
    pub num_preds: usize,
    /// Non-ignored ground-truth instances.
    pub num_gts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl EvalCounts {
    pub fn report(&self) -> EvalReport {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f_measure,
            counts: *self,
            matches: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    #[serde(flatten)]
    pub counts: EvalCounts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub matches: Vec<Match>,
}

/// Greedy one-to-one matching in descending score order. Each prediction
/// takes the unmatched, non-ignored instance with the highest IoU at or
/// above the threshold, unless its best overlap is an ignored instance, in
/// which case it is excluded from scoring.
pub fn match_detections(preds: &[SpotResult], gts: &[GtInstance], iou_thresh: f64) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score).then(a.cmp(&b)));

    let mut taken = vec![false; gts.len()];
    let mut result = MatchResult {
        num_gts: gts.iter().filter(|g| !g.ignore).count(),
        ..Default::default()
    };
    for p in order {
        let mut best: Option<(usize, f64)> = None;
        let mut best_ignored = 0.0f64;
        for (g, gt) in gts.iter().enumerate() {
            let iou = polygon_iou(&preds[p].polygon, &gt.polygon);
            if gt.ignore {
                best_ignored = best_ignored.max(iou);
            } else if !taken[g] && iou >= iou_thresh && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if best_ignored >= iou_thresh && best.is_none_or(|(_, b)| best_ignored > b) {
            result.excluded.push(p);
            continue;
        }
        result.num_preds += 1;
        if let Some((g, iou)) = best {
            taken[g] = true;
            result.matches.push(Match { pred: p, gt: g, iou });
        }
    }
    result
}

impl MatchResult {
    pub fn counts(&self) -> EvalCounts {
        let tp = self.matches.len();
        EvalCounts {
            tp,
            fp: self.num_preds - tp,
            fn_: self.num_gts - tp,
        }
    }
}

pub fn detection_prf(m: &MatchResult) -> EvalReport {
    let mut report = m.counts().report();
    report.matches = m.matches.clone();
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecognitionMode {
    WordSpotting,
    EndToEnd,
}

/// A transcription word spotting scores: at least three characters, all
/// alphanumeric.
pub fn is_spottable(transcription: &str) -> bool {
    transcription.chars().count() >= 3 && transcription.chars().all(|c| c.is_ascii_alphanumeric())
}

fn corrected_text(pred: &SpotResult, lex: Option<&Lexicon>, weighted: bool) -> Result<String> {
    let text = normalize(&pred.text);
    let Some(lex) = lex.filter(|l| l.mode() != LexiconMode::None) else {
        return Ok(text);
    };
    let probs = pred
        .char_probs
        .clone()
        .filter(|rows| rows.len() == text.len() && pred.text.len() == text.len())
        .and_then(|rows| CharProbTable::new(rows).ok())
        .unwrap_or_else(|| CharProbTable::one_hot(&text));
    let decoded = DecodedText {
        text,
        char_scores: Vec::new(),
        confidence: pred.score,
        source: Source::Sam,
        step_probs: None,
    };
    Ok(match_lexicon(&decoded, &probs, lex, weighted)?.word)
}

/// Polygon matching followed by transcription checking. A detection match
/// is a true positive only when the (optionally lexicon-corrected)
/// prediction equals the normalized ground-truth transcription.
pub fn end_to_end_eval(
    preds: &[SpotResult],
    gts: &[GtInstance],
    lex: Option<&Lexicon>,
    mode: RecognitionMode,
    weighted: bool,
    iou_thresh: f64,
) -> Result<EvalReport> {
    if weighted && lex.is_none_or(|l| l.mode() == LexiconMode::None) {
        return Err(Error::LexiconRequired("weighted matching needs a lexicon".into()));
    }
    let scored: Vec<GtInstance> = gts
        .iter()
        .map(|g| GtInstance {
            ignore: g.ignore || (mode == RecognitionMode::WordSpotting && !is_spottable(&g.transcription)),
            ..g.clone()
        })
        .collect();
    let m = match_detections(preds, &scored, iou_thresh);
    let mut matches = Vec::new();
    for mt in &m.matches {
        let got = corrected_text(&preds[mt.pred], lex, weighted)?;
        if got == normalize(&scored[mt.gt].transcription) {
            matches.push(*mt);
        }
    }
    let tp = matches.len();
    let mut report = EvalCounts {
        tp,
        fp: m.num_preds - tp,
        fn_: m.num_gts - tp,
    }
    .report();
    report.matches = matches;
    Ok(report)
}
