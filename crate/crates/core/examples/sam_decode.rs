//! Attention decoding on a random feature map with seeded random weights.
//!
//! Run with `cargo run --example sam_decode -- [seed]`.

use std::time::Instant;

use textspot::rng::Lcg;
use textspot::sam::{encode_features, position_embedding, SamConfig, SamDecoder, SamWeights};
use textspot::synth::random_features;

fn main() -> textspot::error::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = SamConfig::default();
    let weights = SamWeights::random(&cfg, seed)?;
    let feat = random_features(&mut Lcg::new(seed), cfg.in_channels, 14, 50);

    let start = Instant::now();
    let cascaded = encode_features(&feat, &weights, &cfg)?;
    println!("position embedding {:?}", position_embedding(&cfg).shape());
    println!("cascaded features  {:?} ({:.0} ms)", cascaded.shape(), start.elapsed().as_secs_f64() * 1e3);

    let dec = SamDecoder::new(&cascaded, &weights, &cfg)?;
    let greedy = dec.greedy_decode()?;
    let beam = dec.beam_decode(cfg.beam_k)?;
    println!("greedy: {:?} (confidence {:.4})", greedy.text, greedy.confidence);
    println!("beam {}: {:?} (confidence {:.4})", cfg.beam_k, beam.text, beam.confidence);
    println!("total {:.0} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}
