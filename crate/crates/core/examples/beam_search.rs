//! Greedy versus beam search on a small attention decoder. Lists the random
//! weight draws where a wider beam finds a more probable sequence.

use textspot::rng::Lcg;
use textspot::sam::search::{beam, greedy};
use textspot::sam::{SamConfig, SamDecoder, SamWeights};
use textspot::synth::random_features;

fn main() -> textspot::error::Result<()> {
    let cfg = SamConfig {
        map_h: 4,
        map_w: 8,
        in_channels: 8,
        channels: 8,
        hidden: 24,
        attn_dim: 16,
        embed_dim: 8,
        num_classes: 5,
        max_steps: 6,
        ..SamConfig::default()
    };
    let mut rng = Lcg::new(3);
    let (mut shown, mut differ) = (0, 0);
    for seed in 0..300 {
        let weights = SamWeights::random_with_scale(&cfg, seed, 2.5)?;
        let feat = random_features(&mut rng, cfg.in_channels, 8, 16);
        let dec = SamDecoder::from_features(&feat, &weights, &cfg)?;
        let g = greedy(&dec, 0, cfg.max_steps)?;
        let b1 = beam(&dec, 0, 1, cfg.max_steps)?;
        assert_eq!(g.tokens, b1.tokens);
        let b6 = beam(&dec, 0, 6, cfg.max_steps)?;
        if b6.tokens != g.tokens {
            differ += 1;
            if shown < 4 {
                shown += 1;
                println!("seed {seed:>3}: greedy {:?} log p {:.4}", g.tokens, g.log_prob);
                println!("          beam 6 {:?} log p {:.4}", b6.tokens, b6.log_prob);
            }
        }
    }
    println!("beam 6 differs from greedy on {differ} of 300 draws; beam 1 always matches greedy");
    Ok(())
}
