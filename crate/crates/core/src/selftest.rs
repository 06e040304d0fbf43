//! Invariant checks run on generated data, each against its own oracle.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::alphabet::{char_of, NUM_CLASSES};
use crate::io::{decode_tensor, encode_tensor, DType};
use crate::lexicon::{edit_distance, weighted_edit_distance, CharProbTable};
use crate::losses::{char_seg_loss, instance_loss, mask_loss, seq_loss, LossConfig};
use crate::labels::LabelMap;
use crate::rng::Lcg;
use crate::sam::{corrupt_softmax, AttentionState, SamConfig, SamDecoder, SamWeights};
use crate::seg_decode::{pixel_vote, CharMapStack, DEFAULT_BG_THRESHOLD};
use crate::synth::{random_char_stack, random_features};
use crate::tensor::Tensor;

pub const ATTENTION_NORMALIZATION: &str = "attention normalization";

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Swap in a deliberately broken spatial softmax.
    pub corrupt_softmax: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type Outcome = Result<String, String>;

fn timed(name: &'static str, f: impl FnOnce() -> Outcome) -> Check {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let (passed, detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Check {
        name,
        passed,
        detail,
        elapsed,
    }
}

pub fn run(opts: &SelftestOptions) -> Vec<Check> {
    let seed = opts.seed;
    let corrupt = opts.corrupt_softmax;
    vec![
        timed(ATTENTION_NORMALIZATION, || attention_normalization(seed, corrupt)),
        timed("pixel-vote oracle", || pixel_vote_oracle(seed)),
        timed("beam/greedy consistency", || beam_greedy(seed)),
        timed("edit-distance collapse", || ed_collapse(seed)),
        timed("loss closed forms", loss_closed_forms),
        timed("tensor file round trip", || tensor_round_trip(seed)),
    ]
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        s += &format!(
            "{:<width$}  {}  {:>8.1} ms  {}\n",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.elapsed.as_secs_f64() * 1e3,
            c.detail
        );
    }
    s
}

fn small_config() -> SamConfig {
    SamConfig {
        map_h: 4,
        map_w: 8,
        in_channels: 8,
        channels: 8,
        hidden: 16,
        attn_dim: 12,
        embed_dim: 8,
        max_steps: 10,
        ..SamConfig::default()
    }
}

fn attention_normalization(seed: u64, corrupt: bool) -> Outcome {
    let cfg = small_config();
    let mut rng = Lcg::new(seed ^ 0xa11);
    let mut steps = 0;
    let mut worst = 0.0f64;
    for draw in 0..20 {
        let w = SamWeights::random_with_scale(&cfg, seed + draw, 1.0).map_err(|e| e.to_string())?;
        let feat = random_features(&mut rng, cfg.in_channels, 6, 20);
        let mut dec = SamDecoder::from_features(&feat, &w, &cfg).map_err(|e| e.to_string())?;
        if corrupt {
            dec = dec.with_spatial_softmax(corrupt_softmax);
        }
        let mut state = AttentionState::initial(&cfg);
        for _ in 0..10 {
            let out = dec.step(&state).map_err(|e| e.to_string())?;
            let sum: f64 = out.alpha.data().iter().sum();
            worst = worst.max((sum - 1.0).abs());
            if out.alpha.data().iter().any(|&a| a < 0.0) {
                return Err("negative attention weight".into());
            }
            state = out.state;
            state.prev_class = rng.below(cfg.num_classes);
            steps += 1;
        }
    }
    if worst < 1e-9 {
        Ok(format!("{steps} steps, max |sum-1| = {worst:.1e}"))
    } else {
        Err(format!("max |sum-1| = {worst:.3e} over {steps} steps"))
    }
}

/// Union-find labelling of the foreground followed by mean-argmax voting.
fn oracle_vote(stack: &CharMapStack) -> String {
    let t = stack.tensor();
    let (h, w) = (t.shape()[1], t.shape()[2]);
    let fg: Vec<bool> = (0..h * w).map(|p| t.data()[p] < DEFAULT_BG_THRESHOLD).collect();
    let mut parent: Vec<usize> = (0..h * w).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..h {
        for c in 0..w {
            if !fg[r * w + c] {
                continue;
            }
            let mut neighbours = vec![];
            if c > 0 {
                neighbours.push(r * w + c - 1);
            }
            if r > 0 {
                for dc in [-1i64, 0, 1] {
                    let cc = c as i64 + dc;
                    if (0..w as i64).contains(&cc) {
                        neighbours.push((r - 1) * w + cc as usize);
                    }
                }
            }
            for q in neighbours {
                if fg[q] {
                    let (a, b) = (find(&mut parent, r * w + c), find(&mut parent, q));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for (p, &is_fg) in fg.iter().enumerate() {
        if is_fg {
            let root = find(&mut parent, p);
            members.entry(root).or_insert_with(|| {
                order.push(root);
                Vec::new()
            });
            members.get_mut(&root).expect("inserted").push(p);
        }
    }
    let mut comps: Vec<(f64, f64, char)> = order
        .iter()
        .map(|root| {
            let px = &members[root];
            let n = px.len() as f64;
            let row = px.iter().map(|&p| (p / w) as f64).sum::<f64>() / n;
            let col = px.iter().map(|&p| (p % w) as f64).sum::<f64>() / n;
            let mut best = (1, f64::NEG_INFINITY);
            for k in 1..NUM_CLASSES {
                let m = px.iter().map(|&p| t.data()[k * h * w + p]).sum::<f64>() / n;
                if m > best.1 {
                    best = (k, m);
                }
            }
            (col, row, char_of(best.0).expect("class in range"))
        })
        .collect();
    comps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    comps.into_iter().map(|c| c.2).collect()
}

fn pixel_vote_oracle(seed: u64) -> Outcome {
    let mut rng = Lcg::new(seed ^ 0x5e9);
    for i in 0..100 {
        let h = 1 + rng.below(16);
        let w = 1 + rng.below(64);
        let stack = random_char_stack(&mut rng, h, w, 5);
        let got = pixel_vote(&stack, DEFAULT_BG_THRESHOLD).map_err(|e| e.to_string())?.text;
        let want = oracle_vote(&stack);
        if got != want {
            return Err(format!("stack {i} ({h}x{w}): decoded {got:?}, oracle {want:?}"));
        }
    }
    Ok("100 stacks".into())
}

fn beam_greedy(seed: u64) -> Outcome {
    let cfg = small_config();
    let mut rng = Lcg::new(seed ^ 0xbea);
    for draw in 0..10 {
        let w = SamWeights::random_with_scale(&cfg, seed + 100 + draw, 1.5).map_err(|e| e.to_string())?;
        let feat = random_features(&mut rng, cfg.in_channels, 8, 16);
        let dec = SamDecoder::from_features(&feat, &w, &cfg).map_err(|e| e.to_string())?;
        let g = dec.greedy_decode().map_err(|e| e.to_string())?;
        let b = dec.beam_decode(1).map_err(|e| e.to_string())?;
        if g.text != b.text {
            return Err(format!("draw {draw}: greedy {:?} vs beam(1) {:?}", g.text, b.text));
        }
    }
    Ok("10 weight draws".into())
}

/// Plain recursive Levenshtein with memoization.
fn oracle_levenshtein(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len().max(b.len());
    }
    if let Some(&d) = memo.get(&(a.len(), b.len())) {
        return d;
    }
    let (ha, hb) = (&a[..a.len() - 1], &b[..b.len() - 1]);
    let sub = usize::from(a[a.len() - 1] != b[b.len() - 1]);
    let d = (oracle_levenshtein(ha, b, memo) + 1)
        .min(oracle_levenshtein(a, hb, memo) + 1)
        .min(oracle_levenshtein(ha, hb, memo) + sub);
    memo.insert((a.len(), b.len()), d);
    d
}

fn ed_collapse(seed: u64) -> Outcome {
    let mut rng = Lcg::new(seed ^ 0xed);
    let letters = b"abc1";
    for i in 0..200 {
        let word = |rng: &mut Lcg| -> String {
            let n = rng.below(9);
            (0..n).map(|_| letters[rng.below(letters.len())] as char).collect()
        };
        let (a, b) = (word(&mut rng), word(&mut rng));
        let want = oracle_levenshtein(a.as_bytes(), b.as_bytes(), &mut HashMap::new());
        let plain = edit_distance(&a, &b);
        let weighted = weighted_edit_distance(&a, &CharProbTable::one_hot(&a), &b).map_err(|e| e.to_string())?;
        if plain != want || weighted != want as f64 {
            return Err(format!("pair {i} ({a:?},{b:?}): oracle {want}, plain {plain}, weighted {weighted}"));
        }
    }
    Ok("200 pairs".into())
}

fn loss_closed_forms() -> Outcome {
    let fail = |e: crate::error::Error| e.to_string();
    let half = Tensor::full(&[1, 8, 8], 0.5).map_err(fail)?;
    let target = Tensor::from_fn(&[1, 8, 8], |i| ((i[1] + i[2]) % 2) as f64).map_err(fail)?;
    let ins = instance_loss(&half, &target).map_err(fail)?;
    let uniform = Tensor::full(&[NUM_CLASSES, 4, 6], 1.0 / NUM_CLASSES as f64).map_err(fail)?;
    let seg = char_seg_loss(&uniform, &LabelMap::filled(4, 6, 0).map_err(fail)?).map_err(fail)?;
    let rows = vec![vec![1.0 / NUM_CLASSES as f64; NUM_CLASSES]; 5];
    let seq = seq_loss(&rows, &[1, 2, 3, 4, 0]).map_err(fail)?;
    let mask = mask_loss(1.0, 1.0, 1.0, &LossConfig::default());
    let ln37 = (NUM_CLASSES as f64).ln();
    let checks = [
        ("instance", ins, std::f64::consts::LN_2, 1e-9),
        ("segmentation", seg, ln37, 1e-9),
        ("sequence", seq, 5.0 * ln37, 1e-9),
        ("mask", mask, 2.2, 0.0),
    ];
    for (name, got, want, tol) in checks {
        if (got - want).abs() > tol {
            return Err(format!("{name} loss {got} != {want}"));
        }
    }
    Ok("4 closed forms".into())
}

fn tensor_round_trip(seed: u64) -> Outcome {
    let mut rng = Lcg::new(seed ^ 0xf11e);
    for _ in 0..20 {
        let shape: Vec<usize> = (0..1 + rng.below(4)).map(|_| 1 + rng.below(5)).collect();
        let t = Tensor::from_fn(&shape, |_| rng.uniform(-1e3, 1e3)).map_err(|e| e.to_string())?;
        for dtype in [DType::F32, DType::F64] {
            let bytes = encode_tensor(&t, dtype);
            let (back, dt) = decode_tensor(&bytes).map_err(|e| e.to_string())?;
            if encode_tensor(&back, dt) != bytes || (dtype == DType::F64 && back != t) {
                return Err(format!("{dtype:?} round trip changed {shape:?}"));
            }
        }
    }
    Ok("40 files".into())
}
