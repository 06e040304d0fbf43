//! Instance and character targets for a curved word inside a proposal.

use textspot::geometry::{Point, Polygon, Rect};
use textspot::labels::{generate_targets, CharBox};

fn main() -> textspot::error::Result<()> {
    // An arc-shaped word polygon.
    let n = 8;
    let mut pts = Vec::new();
    for i in 0..=n {
        let t = std::f64::consts::PI * (1.0 - i as f64 / n as f64);
        pts.push(Point::new(100.0 + 60.0 * t.cos(), 80.0 - 30.0 * t.sin()));
    }
    for i in (0..=n).rev() {
        let t = std::f64::consts::PI * (1.0 - i as f64 / n as f64);
        pts.push(Point::new(100.0 + 40.0 * t.cos(), 80.0 - 14.0 * t.sin()));
    }
    let word = Polygon::new(pts)?;
    let chars = [
        CharBox::new(12, Rect::new(42.0, 62.0, 62.0, 80.0)?)?,
        CharBox::new(27, Rect::new(90.0, 48.0, 110.0, 66.0)?)?,
        CharBox::new(11, Rect::new(138.0, 62.0, 158.0, 80.0)?)?,
    ];
    let proposal = Rect::new(36.0, 46.0, 164.0, 82.0)?;
    let (w, h) = (64, 16);
    let t = generate_targets(&word, Some(&chars), &proposal, w, h)?;

    println!("instance map ({w}x{h}):");
    for r in 0..h {
        let line: String = (0..w).map(|c| if t.instance_map.at(&[0, r, c]) > 0.0 { '#' } else { '.' }).collect();
        println!("  {line}");
    }
    println!("character map:");
    for r in 0..h {
        let line: String = (0..w)
            .map(|c| match t.char_map.get(r, c) {
                0 => '.',
                -1 => '?',
                k => textspot::alphabet::char_of(k as usize).unwrap(),
            })
            .collect();
        println!("  {line}");
    }
    Ok(())
}
