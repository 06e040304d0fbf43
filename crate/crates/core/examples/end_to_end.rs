//! Both recognizers on one word, fused by confidence and lexicon-corrected.

use textspot::alphabet::class_of;
use textspot::decoded::DecodedText;
use textspot::lexicon::{fuse, match_lexicon, Lexicon, LexiconMode};
use textspot::rng::Lcg;
use textspot::sam::{SamConfig, SamDecoder, SamWeights};
use textspot::seg_decode::{pixel_vote, CharMapStack, DEFAULT_BG_THRESHOLD};
use textspot::synth::{block_stack, random_features, Block};
use textspot::tensor::Tensor;

fn show(label: &str, d: &DecodedText) {
    println!("{label:<13} {:?} (confidence {:.3})", d.text, d.confidence);
}

fn main() -> textspot::error::Result<()> {
    let block = |i: usize, ch, p| Block { r0: 8, c0: 6 + 24 * i, r1: 24, c1: 22 + 24 * i, ch, p };
    let stack = block_stack(32, 128, &[block(0, 'p', 0.9), block(1, '0', 0.55), block(2, 'r', 0.88), block(3, 'k', 0.93)]);
    // The second character is ambiguous: mostly '0' with some 'o' evidence.
    let (h, w) = (32, 128);
    let mut maps = stack.tensor().data().to_vec();
    let o = class_of('o').unwrap();
    for r in 8..24 {
        for c in 30..46 {
            maps[r * w + c] -= 0.3;
            maps[(o * h + r) * w + c] += 0.3;
        }
    }
    let stack = CharMapStack::new(Tensor::new(vec![37, h, w], maps)?)?;
    let seg = pixel_vote(&stack, DEFAULT_BG_THRESHOLD)?;

    let cfg = SamConfig { in_channels: 32, ..SamConfig::default() };
    let weights = SamWeights::random(&cfg, 11)?;
    let feat = random_features(&mut Lcg::new(11), cfg.in_channels, 16, 64);
    let sam = SamDecoder::from_features(&feat, &weights, &cfg)?.beam_decode(cfg.beam_k)?;

    show("segmentation", &seg);
    show("attention", &sam);
    let fused = fuse(Some(&seg), Some(&sam))?;
    show("fused", &fused);

    let lex = Lexicon::new(["park", "pork", "perk", "bark"], LexiconMode::Strong)?;
    let probs = fused.char_prob_table();
    for weighted in [false, true] {
        let m = match_lexicon(&fused, &probs, &lex, weighted)?;
        let kind = if weighted { "weighted" } else { "plain" };
        println!("lexicon       {:?} at {kind} distance {:.3}", m.word, m.distance);
    }
    Ok(())
}
