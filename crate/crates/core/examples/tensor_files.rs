//! Writes and reads tensor files and a weight bundle.

use textspot::io::{decode_tensor, encode_tensor, load_bundle, save_bundle, DType};
use textspot::sam::{SamConfig, SamWeights};
use textspot::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Tensor::from_fn(&[2, 3], |i| i[0] as f64 + 0.1 * i[1] as f64)?;
    for dtype in [DType::F32, DType::F64] {
        let bytes = encode_tensor(&t, dtype);
        let (back, dt) = decode_tensor(&bytes)?;
        println!("{dtype:?}: {} bytes, header {:02x?}, first value {}", bytes.len(), &bytes[..8], back.data()[1]);
        assert_eq!(encode_tensor(&back, dt), bytes);
    }

    let dir = std::env::temp_dir().join(format!("textspot-bundle-{}", std::process::id()));
    let cfg = SamConfig { in_channels: 16, channels: 16, hidden: 32, attn_dim: 32, embed_dim: 16, ..SamConfig::default() };
    save_bundle(&dir, &cfg, &SamWeights::random(&cfg, 1)?, DType::F32)?;
    let (loaded_cfg, weights) = load_bundle(&dir)?;
    println!("bundle at {}: {:?}", dir.display(), loaded_cfg);
    for (name, t) in weights.named() {
        println!("  {name:<13} {:?}", t.shape());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
