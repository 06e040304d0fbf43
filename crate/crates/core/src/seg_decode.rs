//! Pixel voting: turns per-RoI character probability maps into a string.
//!
//! Foreground is every pixel whose background probability is below the
//! threshold. Each 8-connected foreground region votes for the character
//! channel with the largest mean over its pixels, and regions are read left
//! to right by centroid.

use crate::alphabet::{char_of, NUM_CLASSES};
use crate::decoded::{mean, DecodedText, Source};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_BG_THRESHOLD: f64 = 0.75;
const CHANNEL_SUM_TOL: f64 = 1e-4;

/// Validated `[37,H,W]` probability maps; channel 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct CharMapStack {
    maps: Tensor,
}

impl CharMapStack {
    pub fn new(maps: Tensor) -> Result<Self> {
        let (c, h, w) = match maps.shape() {
            &[c, h, w] => (c, h, w),
            s => return Err(Error::shape(format!("char map stack must be [C,H,W], got {s:?}"))),
        };
        if c != NUM_CLASSES {
            return Err(Error::shape(format!(
                "char map stack needs {NUM_CLASSES} channels, got {c}"
            )));
        }
        if let Some(v) = maps.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("probability {v} outside [0,1]")));
        }
        let plane = h * w;
        for p in 0..plane {
            let s: f64 = (0..c).map(|ch| maps.data()[ch * plane + p]).sum();
            if (s - 1.0).abs() > CHANNEL_SUM_TOL {
                return Err(Error::invalid(format!(
                    "channels at pixel ({}, {}) sum to {s}",
                    p / w,
                    p % w
                )));
            }
        }
        Ok(Self { maps })
    }

    pub fn height(&self) -> usize {
        self.maps.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.maps.shape()[2]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.maps
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        self.maps.outer(c)
    }
}

/// An 8-connected set of foreground pixels, listed in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub pixels: Vec<(usize, usize)>,
    pub centroid_row: f64,
    pub centroid_col: f64,
}

fn check_threshold(thresh: f64) -> Result<()> {
    if !(thresh > 0.0 && thresh < 1.0) {
        return Err(Error::invalid(format!("threshold {thresh} outside (0,1)")));
    }
    Ok(())
}

/// `[H,W]` mask: 1 where background probability is strictly below `thresh`.
pub fn binarize_foreground(stack: &CharMapStack, thresh: f64) -> Result<Tensor> {
    check_threshold(thresh)?;
    let data = stack
        .channel(0)
        .iter()
        .map(|&bg| if bg < thresh { 1.0 } else { 0.0 })
        .collect();
    Tensor::new(vec![stack.height(), stack.width()], data)
}

/// Maximal 8-connected components of 1-pixels, ordered by their first pixel
/// in raster order.
pub fn connected_regions(mask: &Tensor) -> Result<Vec<Region>> {
    let (h, w) = match mask.shape() {
        &[h, w] => (h, w),
        s => return Err(Error::shape(format!("mask must be [H,W], got {s:?}"))),
    };
    if mask.data().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("mask must be binary"));
    }
    let fg = mask.data();
    let mut seen = vec![false; h * w];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for start in 0..h * w {
        if fg[start] == 0.0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(p) = stack.pop() {
            let (r, c) = (p / w, p % w);
            pixels.push((r, c));
            for nr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for nc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    let q = nr * w + nc;
                    if fg[q] != 0.0 && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        pixels.sort_unstable();
        let n = pixels.len() as f64;
        let centroid_row = pixels.iter().map(|&(r, _)| r as f64).sum::<f64>() / n;
        let centroid_col = pixels.iter().map(|&(_, c)| c as f64).sum::<f64>() / n;
        regions.push(Region {
            pixels,
            centroid_row,
            centroid_col,
        });
    }
    Ok(regions)
}

/// Mean of every channel over a region's pixels.
fn region_means(stack: &CharMapStack, region: &Region) -> Vec<f64> {
    let w = stack.width();
    let n = region.pixels.len() as f64;
    (0..NUM_CLASSES)
        .map(|c| {
            let ch = stack.channel(c);
            region.pixels.iter().map(|&(r, col)| ch[r * w + col]).sum::<f64>() / n
        })
        .collect()
}

/// Decodes a character map stack by pixel voting.
pub fn pixel_vote(stack: &CharMapStack, thresh: f64) -> Result<DecodedText> {
    let mask = binarize_foreground(stack, thresh)?;
    let mut regions = connected_regions(&mask)?;
    if regions.is_empty() {
        return Ok(DecodedText {
            step_probs: Some(Vec::new()),
            ..DecodedText::empty(Source::Segmentation)
        });
    }
    regions.sort_by(|a, b| {
        a.centroid_col
            .total_cmp(&b.centroid_col)
            .then(a.centroid_row.total_cmp(&b.centroid_row))
    });

    let mut text = String::with_capacity(regions.len());
    let mut char_scores = Vec::with_capacity(regions.len());
    let mut rows = Vec::with_capacity(regions.len());
    for region in &regions {
        let means = region_means(stack, region);
        let mut best = 1;
        for c in 2..NUM_CLASSES {
            if means[c] > means[best] {
                best = c;
            }
        }
        text.push(char_of(best).expect("class in 1..=36"));
        char_scores.push(means[best]);
        rows.push(means);
    }
    Ok(DecodedText {
        text,
        confidence: mean(&char_scores),
        char_scores,
        source: Source::Segmentation,
        step_probs: Some(rows),
    })
}
