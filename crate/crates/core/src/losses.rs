//! Mask-branch losses as plain scalar functions over probabilities.

use crate::alphabet::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::labels::{LabelMap, IGNORE};
use crate::tensor::Tensor;

/// Probabilities are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 1.0,
            beta2: 0.2,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.beta1, self.beta2];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!("loss weights must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Average binary cross-entropy of a `[1,H,W]` instance map.
pub fn instance_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "instance prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.numel() as f64;
    let total: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let p = clamp_p(p);
            t * p.ln() + (1.0 - t) * (1.0 - p).ln()
        })
        .sum();
    Ok(-total / n)
}

/// Per-pixel weights balancing character pixels against background.
/// Background gets 1, characters `N_neg / (N - N_neg)` (0 when there is no
/// background), ignored pixels 0. `N` counts non-ignored pixels only.
pub fn seg_weights(target: &LabelMap) -> Tensor {
    let codes = target.codes();
    let n_neg = codes.iter().filter(|&&c| c == 0).count();
    let n = codes.iter().filter(|&&c| c != IGNORE).count();
    let pos_weight = if n_neg == 0 || n == n_neg {
        0.0
    } else {
        n_neg as f64 / (n - n_neg) as f64
    };
    let data = codes
        .iter()
        .map(|&c| match c {
            IGNORE => 0.0,
            0 => 1.0,
            _ => pos_weight,
        })
        .collect();
    Tensor::new(vec![target.height(), target.width()], data).expect("label map has valid dims")
}

/// Weighted spatial cross-entropy of `[37,H,W]` probability maps against a
/// character label map, averaged over non-ignored pixels.
pub fn char_seg_loss(pred: &Tensor, target: &LabelMap) -> Result<f64> {
    let (h, w) = (target.height(), target.width());
    if pred.shape() != [NUM_CLASSES, h, w] {
        return Err(Error::shape(format!(
            "char prediction {:?} vs target {h}x{w}",
            pred.shape()
        )));
    }
    let weights = seg_weights(target);
    let plane = h * w;
    let mut total = 0.0;
    let mut n = 0usize;
    for (px, &code) in target.codes().iter().enumerate() {
        if code == IGNORE {
            continue;
        }
        n += 1;
        let p = pred.data()[code as usize * plane + px].clamp(EPS, 1.0);
        total += weights.data()[px] * p.ln();
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(-total / n as f64)
}

/// Negative log-likelihood of a target class sequence (including its
/// terminal EOS) under per-step probability rows.
pub fn seq_loss(step_probs: &[Vec<f64>], target: &[usize]) -> Result<f64> {
    if step_probs.len() != target.len() {
        return Err(Error::shape(format!(
            "{} probability rows for {} targets",
            step_probs.len(),
            target.len()
        )));
    }
    let mut total = 0.0;
    for (t, (row, &y)) in step_probs.iter().zip(target).enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("step {t} probabilities sum to {s}")));
        }
        let p = *row
            .get(y)
            .ok_or(Error::ClassOutOfRange(y as i64))?;
        total -= p.clamp(EPS, 1.0).ln();
    }
    Ok(total)
}

pub fn mask_loss(ins: f64, seg: f64, seq: f64, cfg: &LossConfig) -> f64 {
    ins + cfg.beta1 * seg + cfg.beta2 * seq
}

/// Full multi-task objective given externally computed detector losses.
pub fn multi_task_loss(rpn: f64, rcnn: f64, mask: f64, cfg: &LossConfig) -> f64 {
    rpn + cfg.alpha1 * rcnn + cfg.alpha2 * mask
}
