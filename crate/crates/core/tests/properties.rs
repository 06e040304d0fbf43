use proptest::prelude::*;

use textspot::eval::{detection_prf, end_to_end_eval, match_detections, GtInstance, RecognitionMode, SpotResult};
use textspot::geometry::Rect;
use textspot::seg_decode::pixel_vote;
use textspot::synth::{block_stack, Block};

fn boxes(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.0..80.0, 0.0..40.0, 2.0..20.0, 2.0..12.0), 0..max)
}

fn words() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["road", "sign", "ok", "shop", "a-b", "exit"]).prop_map(str::to_string)
}

prop_compose! {
    fn scene()(gt_boxes in boxes(6), pred_boxes in boxes(6))
        (gt_words in prop::collection::vec((words(), prop::bool::weighted(0.15)), gt_boxes.len()),
         pred_words in prop::collection::vec(words(), pred_boxes.len()),
         gt_boxes in Just(gt_boxes), pred_boxes in Just(pred_boxes))
        -> (Vec<GtInstance>, Vec<SpotResult>) {
        let poly = |(x, y, w, h): (f64, f64, f64, f64)| Rect::new(x, y, x + w, y + h).unwrap().to_polygon();
        let gts = gt_boxes.iter().zip(gt_words).map(|(&b, (t, ignore))| GtInstance {
            polygon: poly(b), transcription: t, ignore,
        }).collect();
        let n = pred_boxes.len();
        let preds = pred_boxes.iter().zip(pred_words).enumerate().map(|(i, (&b, t))| SpotResult {
            polygon: poly(b), text: t, score: 1.0 - i as f64 / (n as f64 + 1.0), char_probs: None,
        }).collect();
        (gts, preds)
    }
}

proptest! {
    #[test]
    fn prf_in_unit_interval((gts, preds) in scene()) {
        let r = detection_prf(&match_detections(&preds, &gts, 0.5));
        for v in [r.precision, r.recall, r.f_measure] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(r.f_measure == 0.0, r.precision == 0.0 || r.recall == 0.0);
    }

    #[test]
    fn text_checks_only_remove_matches((gts, preds) in scene()) {
        let det = detection_prf(&match_detections(&preds, &gts, 0.5));
        let e2e = end_to_end_eval(&preds, &gts, None, RecognitionMode::EndToEnd, false, 0.5).unwrap();
        prop_assert!(e2e.counts.tp <= det.counts.tp);
    }

    #[test]
    fn order_invariant_with_distinct_scores((gts, preds) in scene(), seed in any::<u64>()) {
        let mut shuffled = preds.clone();
        let mut rng = textspot::rng::Lcg::new(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.below(i + 1));
        }
        let a = match_detections(&preds, &gts, 0.5).counts();
        let b = match_detections(&shuffled, &gts, 0.5).counts();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn duplicates_never_help((gts, preds) in scene(), pick in any::<prop::sample::Index>()) {
        prop_assume!(!preds.is_empty());
        let base = detection_prf(&match_detections(&preds, &gts, 0.5));
        let mut dup = preds.clone();
        let mut copy = preds[pick.index(preds.len())].clone();
        copy.score -= 1e-9;
        dup.push(copy);
        let more = detection_prf(&match_detections(&dup, &gts, 0.5));
        prop_assert!(more.recall <= base.recall);
        prop_assert!(more.precision <= base.precision);
    }

    #[test]
    fn region_insertion_order_is_irrelevant(
        spec in prop::collection::vec((0usize..5, 1usize..4, 1usize..4, prop::sample::select(vec!['a', 'k', '7', 'z']), 0.3f64..1.0), 1..6),
        seed in any::<u64>(),
    ) {
        // One block per 6-column band so blocks never overlap.
        let blocks: Vec<Block> = spec.iter().enumerate().map(|(i, &(r0, bh, bw, ch, p))| Block {
            r0, c0: 6 * i + 1, r1: r0 + bh, c1: 6 * i + 1 + bw, ch, p,
        }).collect();
        let mut shuffled = blocks.clone();
        let mut rng = textspot::rng::Lcg::new(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.below(i + 1));
        }
        let a = pixel_vote(&block_stack(10, 40, &blocks), 0.75).unwrap();
        let b = pixel_vote(&block_stack(10, 40, &shuffled), 0.75).unwrap();
        prop_assert_eq!(a.text, b.text);
    }
}
