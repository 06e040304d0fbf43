//! Plain versus probability-weighted edit distance for lexicon correction.

use textspot::alphabet::class_of;
use textspot::decoded::{DecodedText, Source};
use textspot::lexicon::{edit_distance, match_lexicon, weighted_edit_distance, CharProbTable, Lexicon, LexiconMode};

fn main() -> textspot::error::Result<()> {
    let pred = "he1lo";
    let mut rows = CharProbTable::one_hot(pred).rows().to_vec();
    rows[2] = vec![0.0; 36];
    rows[2][class_of('1').unwrap() - 1] = 0.45;
    rows[2][class_of('l').unwrap() - 1] = 0.45;
    rows[2][class_of('i').unwrap() - 1] = 0.10;
    let probs = CharProbTable::new(rows)?;

    let words = ["he1io", "hello"];
    for w in words {
        println!(
            "{pred} -> {w}: edit distance {}, weighted {:.2}",
            edit_distance(pred, w),
            weighted_edit_distance(pred, &probs, w)?
        );
    }
    let decoded = DecodedText {
        text: pred.into(),
        char_scores: vec![1.0, 1.0, 0.45, 1.0, 1.0],
        confidence: 0.89,
        source: Source::Sam,
        step_probs: None,
    };
    let lex = Lexicon::new(words, LexiconMode::Strong)?;
    println!("plain match:    {:?}", match_lexicon(&decoded, &probs, &lex, false)?);
    println!("weighted match: {:?}", match_lexicon(&decoded, &probs, &lex, true)?);
    Ok(())
}
