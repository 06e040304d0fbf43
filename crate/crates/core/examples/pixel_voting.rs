//! Decodes a synthetic character-map stack by pixel voting.

use textspot::seg_decode::{binarize_foreground, connected_regions, pixel_vote, DEFAULT_BG_THRESHOLD};
use textspot::synth::{block_stack, Block};

fn main() -> textspot::error::Result<()> {
    let stack = block_stack(
        32,
        128,
        &[
            Block { r0: 8, c0: 70, r1: 24, c1: 84, ch: 'x', p: 0.86 },
            Block { r0: 8, c0: 10, r1: 24, c1: 26, ch: 'e', p: 0.91 },
            Block { r0: 8, c0: 40, r1: 24, c1: 54, ch: '1', p: 0.64 },
            Block { r0: 8, c0: 100, r1: 24, c1: 116, ch: 't', p: 0.95 },
        ],
    );
    let mask = binarize_foreground(&stack, DEFAULT_BG_THRESHOLD)?;
    for (i, r) in connected_regions(&mask)?.iter().enumerate() {
        println!(
            "region {i}: {} px, centroid (row {:.1}, col {:.1})",
            r.pixels.len(),
            r.centroid_row,
            r.centroid_col
        );
    }
    let decoded = pixel_vote(&stack, DEFAULT_BG_THRESHOLD)?;
    println!("text {:?}", decoded.text);
    let scores: Vec<String> = decoded.char_scores.iter().map(|s| format!("{s:.3}")).collect();
    println!("char scores [{}]", scores.join(", "));
    println!("confidence {:.4}", decoded.confidence);
    Ok(())
}
