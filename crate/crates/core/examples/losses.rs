//! Mask-branch losses on small hand-made targets.

use textspot::labels::LabelMap;
use textspot::losses::{char_seg_loss, instance_loss, mask_loss, seg_weights, seq_loss, LossConfig};
use textspot::tensor::Tensor;

fn main() -> textspot::error::Result<()> {
    let target = Tensor::from_fn(&[1, 4, 8], |i| f64::from(u8::from((2..6).contains(&i[2]))))?;
    let pred = Tensor::from_fn(&[1, 4, 8], |i| if (2..6).contains(&i[2]) { 0.8 } else { 0.1 })?;
    let ins = instance_loss(&pred, &target)?;

    let mut codes = vec![0; 32];
    for r in 1..3 {
        for c in 2..6 {
            codes[r * 8 + c] = 11;
        }
    }
    let labels = LabelMap::new(4, 8, codes)?;
    println!("pixel weights row 1: {:?}", &seg_weights(&labels).data()[8..16]);
    let probs = Tensor::from_fn(&[37, 4, 8], |i| {
        let hot = if labels.get(i[1], i[2]) == 11 { 11 } else { 0 };
        if i[0] == hot { 0.64 } else { 0.01 }
    })?;
    let seg = char_seg_loss(&probs, &labels)?;

    let step = |k: usize| {
        let mut row = vec![0.2 / 36.0; 37];
        row[k] = 0.8;
        row
    };
    let seq = seq_loss(&[step(11), step(12), step(0)], &[11, 12, 0])?;

    let cfg = LossConfig::default();
    println!("instance {ins:.4}, segmentation {seg:.4}, sequence {seq:.4}");
    println!("mask loss {:.4} with {cfg:?}", mask_loss(ins, seg, seq, &cfg));
    Ok(())
}
