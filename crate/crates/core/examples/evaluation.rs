//! Detection, end-to-end and word-spotting scores on a toy image.

use textspot::eval::{detection_prf, end_to_end_eval, match_detections, GtInstance, RecognitionMode, SpotResult};
use textspot::geometry::Polygon;
use textspot::lexicon::{Lexicon, LexiconMode};

fn quad(x: f64, y: f64, w: f64, h: f64, slant: f64) -> Polygon {
    Polygon::from_coords(&[(x, y), (x + w, y + slant), (x + w, y + h + slant), (x, y + h)]).unwrap()
}

fn main() -> textspot::error::Result<()> {
    let gt = |x, t: &str, ignore| GtInstance { polygon: quad(x, 0.0, 40.0, 12.0, 4.0), transcription: t.into(), ignore };
    let gts = vec![gt(0.0, "Coffee", false), gt(60.0, "shop", false), gt(120.0, "to", false), gt(180.0, "###", true)];
    let pred = |x, t: &str, score| SpotResult { polygon: quad(x, 1.0, 40.0, 12.0, 3.0), text: t.into(), score, char_probs: None };
    let preds = vec![pred(2.0, "coffee", 0.95), pred(61.0, "sh0p", 0.9), pred(121.0, "to", 0.6), pred(181.0, "open", 0.8)];

    let m = match_detections(&preds, &gts, 0.5);
    println!("matches {:?}, excluded {:?}", m.matches, m.excluded);
    let det = detection_prf(&m);
    println!("detection     P {:.3} R {:.3} F {:.3}", det.precision, det.recall, det.f_measure);

    let lex = Lexicon::new(["coffee", "shop", "open", "to"], LexiconMode::Strong)?;
    for (name, mode) in [("end-to-end", RecognitionMode::EndToEnd), ("word spotting", RecognitionMode::WordSpotting)] {
        let raw = end_to_end_eval(&preds, &gts, None, mode, false, 0.5)?;
        let fixed = end_to_end_eval(&preds, &gts, Some(&lex), mode, false, 0.5)?;
        println!("{name:<13} F {:.3} raw, {:.3} with lexicon", raw.f_measure, fixed.f_measure);
    }
    Ok(())
}
