//! Mask-branch training targets: the text instance map and the character map.
//!
//! Ground truth is first shifted and scaled into the proposal's target frame
//! (`W x H`, 128 x 32 by default), then rasterized by pixel-centre sampling.

use serde::{Deserialize, Serialize};

use crate::alphabet::NUM_CHARS;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, ProposalRect, Rect};
use crate::tensor::Tensor;

pub const DEFAULT_TARGET_W: usize = 128;
pub const DEFAULT_TARGET_H: usize = 32;

/// Code written for pixels that must not contribute to the loss.
pub const IGNORE: i32 = -1;

/// A labelled character box. `cls` uses segmentation indexing (1..=36).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharBox {
    pub cls: usize,
    #[serde(rename = "box", with = "rect_array")]
    pub rect: Rect,
}

mod rect_array {
    use super::Rect;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Rect, s: S) -> Result<S::Ok, S::Error> {
        [r.x_min, r.y_min, r.x_max, r.y_max].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rect, D::Error> {
        let [x0, y0, x1, y1] = <[f64; 4]>::deserialize(d)?;
        Rect::new(x0, y0, x1, y1).map_err(serde::de::Error::custom)
    }
}

impl CharBox {
    pub fn new(cls: usize, rect: Rect) -> Result<Self> {
        let cb = Self { cls, rect };
        cb.validate()?;
        Ok(cb)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=NUM_CHARS).contains(&self.cls) {
            return Err(Error::ClassOutOfRange(self.cls as i64));
        }
        self.rect.validate()
    }
}

/// Integer label map (row-major, `h x w`) with codes in `{-1, 0, 1..=36}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    h: usize,
    w: usize,
    codes: Vec<i32>,
}

impl LabelMap {
    pub fn new(h: usize, w: usize, codes: Vec<i32>) -> Result<Self> {
        if h == 0 || w == 0 || codes.len() != h * w {
            return Err(Error::shape(format!(
                "label map {h}x{w} given {} codes",
                codes.len()
            )));
        }
        if let Some(&c) = codes.iter().find(|&&c| c < IGNORE || c > NUM_CHARS as i32) {
            return Err(Error::ClassOutOfRange(c.into()));
        }
        Ok(Self { h, w, codes })
    }

    pub fn filled(h: usize, w: usize, code: i32) -> Result<Self> {
        Self::new(h, w, vec![code; h * w])
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn codes(&self) -> &[i32] {
        &self.codes
    }

    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.codes[row * self.w + col]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            vec![self.h, self.w],
            self.codes.iter().map(|&c| f64::from(c)).collect(),
        )
        .expect("label map dimensions are validated")
    }

    /// Reads a `[H,W]` tensor of integral codes.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (h, w) = match t.shape() {
            &[h, w] => (h, w),
            s => return Err(Error::shape(format!("label map must be [H,W], got {s:?}"))),
        };
        let codes = t
            .data()
            .iter()
            .map(|&v| {
                if v.fract() != 0.0 {
                    Err(Error::invalid(format!("label code {v} is not an integer")))
                } else {
                    Ok(v as i32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(h, w, codes)
    }
}

/// The two mask-branch targets for one proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTargets {
    /// `[1,H,W]`, values in `{0,1}`.
    pub instance_map: Tensor,
    pub char_map: LabelMap,
}

fn check_target(w: usize, h: usize) -> Result<()> {
    if w == 0 || h == 0 {
        return Err(Error::invalid("target map extent must be positive"));
    }
    Ok(())
}

/// Shifts and scales a point from image coordinates into the `W x H` frame
/// of proposal `r`. Points outside the proposal are not clipped.
pub fn align_to_proposal(pt: Point, r: &ProposalRect, target_w: usize, target_h: usize) -> Result<Point> {
    if !(r.x_max > r.x_min && r.y_max > r.y_min) {
        return Err(Error::invalid(format!("proposal {r:?} has zero width or height")));
    }
    Ok(Point::new(
        (pt.x - r.x_min) * target_w as f64 / (r.x_max - r.x_min),
        (pt.y - r.y_min) * target_h as f64 / (r.y_max - r.y_min),
    ))
}

pub fn align_polygon(poly: &Polygon, r: &ProposalRect, w: usize, h: usize) -> Result<Polygon> {
    let vs = poly
        .vertices()
        .iter()
        .map(|&p| align_to_proposal(p, r, w, h))
        .collect::<Result<Vec<_>>>()?;
    Polygon::new(vs)
}

pub fn align_char_box(cb: &CharBox, r: &ProposalRect, w: usize, h: usize) -> Result<CharBox> {
    let lo = align_to_proposal(Point::new(cb.rect.x_min, cb.rect.y_min), r, w, h)?;
    let hi = align_to_proposal(Point::new(cb.rect.x_max, cb.rect.y_max), r, w, h)?;
    CharBox::new(cb.cls, Rect::new(lo.x, lo.y, hi.x, hi.y)?)
}

fn pixel_center(row: usize, col: usize) -> Point {
    Point::new(col as f64 + 0.5, row as f64 + 0.5)
}

/// Fills the polygon on a zero map: a pixel is 1 when its centre is inside
/// under the nonzero winding rule.
pub fn rasterize_instance(poly: &Polygon, w: usize, h: usize) -> Result<Tensor> {
    check_target(w, h)?;
    Tensor::from_fn(&[1, h, w], |i| f64::from(u8::from(poly.contains(pixel_center(i[1], i[2])))))
}

/// Keeps the centre and shortens both sides to a quarter.
pub fn shrink_char_box(cb: &CharBox) -> CharBox {
    let c = cb.rect.center();
    let hw = cb.rect.width() / 8.0;
    let hh = cb.rect.height() / 8.0;
    CharBox {
        cls: cb.cls,
        rect: Rect {
            x_min: c.x - hw,
            y_min: c.y - hh,
            x_max: c.x + hw,
            y_max: c.y + hh,
        },
    }
}

/// Character target map. `None` means the sample has no character
/// annotations and every pixel is [`IGNORE`]; otherwise pixels whose centre
/// lies in a shrunk box take its class (later boxes win), the rest are 0.
pub fn render_char_map(chars: Option<&[CharBox]>, w: usize, h: usize) -> Result<LabelMap> {
    check_target(w, h)?;
    let Some(chars) = chars else {
        return LabelMap::filled(h, w, IGNORE);
    };
    let mut codes = vec![0i32; w * h];
    for cb in chars {
        cb.validate()?;
        let s = shrink_char_box(cb).rect;
        // Candidate rows and columns whose centres can fall in the box.
        let r0 = ((s.y_min - 0.5).ceil().max(0.0)) as usize;
        let c0 = ((s.x_min - 0.5).ceil().max(0.0)) as usize;
        for row in r0..h {
            if row as f64 + 0.5 >= s.y_max {
                break;
            }
            for col in c0..w {
                if col as f64 + 0.5 >= s.x_max {
                    break;
                }
                if s.contains(pixel_center(row, col)) {
                    codes[row * w + col] = cb.cls as i32;
                }
            }
        }
    }
    LabelMap::new(h, w, codes)
}

/// Aligns the matched polygon and character boxes to a proposal and renders
/// both targets.
pub fn generate_targets(
    poly: &Polygon,
    chars: Option<&[CharBox]>,
    proposal: &ProposalRect,
    w: usize,
    h: usize,
) -> Result<LabelTargets> {
    let aligned = align_polygon(poly, proposal, w, h)?;
    let aligned_chars = chars
        .map(|cs| {
            cs.iter()
                .map(|c| align_char_box(c, proposal, w, h))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(LabelTargets {
        instance_map: rasterize_instance(&aligned, w, h)?,
        char_map: render_char_map(aligned_chars.as_deref(), w, h)?,
    })
}
