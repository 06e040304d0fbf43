//! Seeded synthetic inputs for demos and self-checks.

use crate::alphabet::{class_of, NUM_CHARS, NUM_CLASSES};
use crate::rng::Lcg;
use crate::seg_decode::CharMapStack;
use crate::tensor::Tensor;

/// A filled rectangle `rows r0..r1, cols c0..c1` of character `ch` whose
/// class channel holds `p` and background `1 - p`.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
    pub ch: char,
    pub p: f64,
}

/// Stack that is pure background outside the given blocks.
pub fn block_stack(h: usize, w: usize, blocks: &[Block]) -> CharMapStack {
    let plane = h * w;
    let mut data = vec![0.0; NUM_CLASSES * plane];
    data[..plane].fill(1.0);
    for b in blocks {
        let cls = class_of(b.ch).expect("alphanumeric block");
        for r in b.r0..b.r1.min(h) {
            for c in b.c0..b.c1.min(w) {
                let px = r * w + c;
                for k in 0..NUM_CLASSES {
                    data[k * plane + px] = 0.0;
                }
                data[px] = 1.0 - b.p;
                data[cls * plane + px] = b.p;
            }
        }
    }
    CharMapStack::new(Tensor::new(vec![NUM_CLASSES, h, w], data).expect("finite")).expect("valid stack")
}

/// Random stack of size `h x w` with up to `max_blocks` rectangles of mixed
/// character evidence. Background pixels carry some class noise, with a few
/// sitting exactly on the 0.75 threshold.
pub fn random_char_stack(rng: &mut Lcg, h: usize, w: usize, max_blocks: usize) -> CharMapStack {
    let plane = h * w;
    let mut data = vec![0.0; NUM_CLASSES * plane];
    let set_pixel = |data: &mut [f64], px: usize, bg: f64, main: usize, share: f64, other: usize| {
        for k in 0..NUM_CLASSES {
            data[k * plane + px] = 0.0;
        }
        let rest = 1.0 - bg;
        data[px] = bg;
        data[main * plane + px] += rest * share;
        data[other * plane + px] += rest * (1.0 - share);
    };
    for px in 0..plane {
        let bg = if rng.below(10) == 0 { 0.75 } else { rng.uniform(0.76, 1.0) };
        let (a, b) = (1 + rng.below(NUM_CHARS), 1 + rng.below(NUM_CHARS));
        set_pixel(&mut data, px, bg, a, rng.next_f64(), b);
    }
    let blocks = 1 + rng.below(max_blocks.max(1));
    for _ in 0..blocks {
        let bh = 1 + rng.below(h.min(6));
        let bw = 1 + rng.below(w.min(8));
        let r0 = rng.below(h - bh + 1);
        let c0 = rng.below(w - bw + 1);
        let main = 1 + rng.below(NUM_CHARS);
        for r in r0..r0 + bh {
            for c in c0..c0 + bw {
                let bg = rng.uniform(0.0, 0.74);
                let other = 1 + rng.below(NUM_CHARS);
                set_pixel(&mut data, r * w + c, bg, main, rng.uniform(0.3, 1.0), other);
            }
        }
    }
    CharMapStack::new(Tensor::new(vec![NUM_CLASSES, h, w], data).expect("finite")).expect("valid stack")
}

/// Random `[C,H,W]` feature map with values in `[-1, 1)`.
pub fn random_features(rng: &mut Lcg, c: usize, h: usize, w: usize) -> Tensor {
    Tensor::from_fn(&[c, h, w], |_| rng.uniform(-1.0, 1.0)).expect("positive extents")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seg_decode::{binarize_foreground, connected_regions};

    #[test]
    fn random_stacks_are_valid_and_bounded() {
        let mut rng = Lcg::new(7);
        for _ in 0..50 {
            let s = random_char_stack(&mut rng, 16, 64, 5);
            let regions = connected_regions(&binarize_foreground(&s, 0.75).unwrap()).unwrap();
            assert!((1..=5).contains(&regions.len()));
        }
    }

    #[test]
    fn blocks_write_probabilities() {
        let s = block_stack(
            4,
            6,
            &[Block { r0: 1, c0: 1, r1: 3, c1: 3, ch: 'a', p: 0.9 }],
        );
        let a = class_of('a').unwrap();
        assert!((s.channel(a)[6 + 1] - 0.9).abs() < 1e-15);
        assert!((s.channel(0)[6 + 1] - 0.1).abs() < 1e-15);
        assert_eq!(s.channel(0)[0], 1.0);
    }
}
