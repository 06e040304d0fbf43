//! Reference implementations written independently of the library.

#![allow(dead_code)]

use textspot::alphabet::ALPHABET;
use textspot::seg_decode::CharMapStack;

/// Recursive flood fill over 8-neighbours, then per-channel means, argmax
/// over character channels and a left-to-right sort.
pub fn flood_fill_vote(stack: &CharMapStack, thresh: f64) -> (String, Vec<f64>) {
    let t = stack.tensor();
    let (c, h, w) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    let at = |k: usize, r: usize, col: usize| t.data()[(k * h + r) * w + col];
    let mut label = vec![vec![usize::MAX; w]; h];

    fn fill(label: &mut [Vec<usize>], fg: &dyn Fn(usize, usize) -> bool, r: i64, c: i64, id: usize) {
        let (h, w) = (label.len() as i64, label[0].len() as i64);
        if r < 0 || c < 0 || r >= h || c >= w {
            return;
        }
        let (ru, cu) = (r as usize, c as usize);
        if !fg(ru, cu) || label[ru][cu] != usize::MAX {
            return;
        }
        label[ru][cu] = id;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr != 0 || dc != 0 {
                    fill(label, fg, r + dr, c + dc, id);
                }
            }
        }
    }

    let fg = |r: usize, col: usize| at(0, r, col) < thresh;
    let mut count = 0;
    for r in 0..h {
        for col in 0..w {
            if fg(r, col) && label[r][col] == usize::MAX {
                fill(&mut label, &fg, r as i64, col as i64, count);
                count += 1;
            }
        }
    }

    let mut regions: Vec<(f64, f64, char, f64)> = Vec::new();
    for id in 0..count {
        let pixels: Vec<(usize, usize)> = (0..h)
            .flat_map(|r| (0..w).map(move |col| (r, col)))
            .filter(|&(r, col)| label[r][col] == id)
            .collect();
        let n = pixels.len() as f64;
        let row = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
        let column = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
        let means: Vec<f64> = (0..c)
            .map(|k| pixels.iter().map(|&(r, col)| at(k, r, col)).sum::<f64>() / n)
            .collect();
        let mut best = 1;
        for k in 2..c {
            if means[k] > means[best] {
                best = k;
            }
        }
        regions.push((column, row, ALPHABET.as_bytes()[best - 1] as char, means[best]));
    }
    regions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    (
        regions.iter().map(|r| r.2).collect(),
        regions.iter().map(|r| r.3).collect(),
    )
}

/// Levenshtein distance by memoized recursion on prefix lengths.
pub fn recursive_levenshtein(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(d) = memo[i][j] {
            return d;
        }
        let d = (go(a, b, i - 1, j, memo) + 1)
            .min(go(a, b, i, j - 1, memo) + 1)
            .min(go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]));
        memo[i][j] = Some(d);
        d
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, a.len(), b.len(), &mut memo)
}

/// Probability of `ch` in a 36-wide row.
pub fn row_prob(row: &[f64], ch: u8) -> f64 {
    row[ALPHABET.bytes().position(|x| x == ch).expect("alphanumeric")]
}

/// Minimum over every edit path (no memoization) of the probability-weighted
/// operation costs. Once either string is exhausted the rest costs one per
/// character.
pub fn enumerate_weighted_paths(pred: &[u8], rows: &[Vec<f64>], cand: &[u8]) -> f64 {
    fn go(pred: &[u8], rows: &[Vec<f64>], cand: &[u8], i: usize, j: usize) -> f64 {
        if i == 0 || j == 0 {
            return i.max(j) as f64;
        }
        let n = pred.len();
        let c = cand[j - 1];
        let delete = row_prob(&rows[i - 1], pred[i - 1]);
        let r = i.min(n - 1);
        let insert = if c == pred[r] { 1.0 } else { 1.0 - row_prob(&rows[r], c) };
        let replace = if c == pred[i - 1] { 0.0 } else { 1.0 - row_prob(&rows[i - 1], c) };
        (go(pred, rows, cand, i - 1, j) + delete)
            .min(go(pred, rows, cand, i, j - 1) + insert)
            .min(go(pred, rows, cand, i - 1, j - 1) + replace)
    }
    go(pred, rows, cand, pred.len(), cand.len())
}
