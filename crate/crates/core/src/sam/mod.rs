//! Spatial attention decoder.
//!
//! A feature map is resized, passed through conv → max-pool → conv, and
//! cascaded with a one-hot position embedding into `F` of shape
//! `(C + H_p + W_p, H_p, W_p)`. Each decoding step scores every location
//! against the previous hidden state, takes the attention-weighted glimpse of
//! `F`, joins it with an embedding of the previous class, and runs one GRU
//! step followed by a softmax classifier.

pub mod search;
mod weights;

pub use search::{Hypothesis, StepModel};
pub use weights::{SamConfig, SamWeights};

use crate::alphabet::{char_of, EOS};
use crate::decoded::{mean, DecodedText, Source};
use crate::error::{Error, Result};
use crate::tensor::{matvec, softmax_in_place, Tensor};

/// One-hot column and row embedding, shape `(W_p + H_p, H_p, W_p)`.
/// Channel `c < W_p` marks column `c`; channel `W_p + r` marks row `r`.
pub fn position_embedding(cfg: &SamConfig) -> Tensor {
    let (h, w) = (cfg.map_h, cfg.map_w);
    Tensor::from_fn(&[w + h, h, w], |i| {
        let (ch, row, col) = (i[0], i[1], i[2]);
        let hot = if ch < w { col == ch } else { row == ch - w };
        f64::from(u8::from(hot))
    })
    .expect("positive extents")
}

/// Resize → conv(3x3) → max-pool(2) → conv(3x3), then cascade the position
/// embedding.
pub fn encode_features(feat: &Tensor, weights: &SamWeights, cfg: &SamConfig) -> Result<Tensor> {
    cfg.validate()?;
    let c_in = match feat.shape() {
        &[c, _, _] => c,
        s => return Err(Error::shape(format!("feature map must be [C,H,W], got {s:?}"))),
    };
    if c_in != cfg.in_channels {
        return Err(Error::shape(format!(
            "feature map has {c_in} channels, decoder expects {}",
            cfg.in_channels
        )));
    }
    let (ih, iw) = cfg.input_size();
    let x = feat.bilinear_resize(ih, iw)?;
    let x = x.conv2d(&weights.conv1_w, &weights.conv1_b, 1, 1)?;
    let x = x.maxpool2d(2, 2)?;
    let x = x.conv2d(&weights.conv2_w, &weights.conv2_b, 1, 1)?;
    debug_assert_eq!(x.shape(), &[cfg.channels, cfg.map_h, cfg.map_w]);
    Tensor::concat_outer(&[&x, &position_embedding(cfg)])
}

/// Decoder state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionState {
    /// Hidden state `s`.
    pub hidden: Vec<f64>,
    /// Previously emitted class (EOS doubles as the start token).
    pub prev_class: usize,
    pub step: usize,
}

impl AttentionState {
    pub fn initial(cfg: &SamConfig) -> Self {
        Self {
            hidden: vec![0.0; cfg.hidden],
            prev_class: EOS,
            step: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Class distribution, length `N_c`.
    pub probs: Vec<f64>,
    /// State after the GRU update; `prev_class` is still the input class.
    pub state: AttentionState,
    /// Attention weights, `[H_p, W_p]`.
    pub alpha: Tensor,
    /// Attention-weighted glimpse of `F`.
    pub glimpse: Vec<f64>,
}

/// Decoder bound to one encoded feature map. The step-invariant projection
/// `W_f·F + b` is computed once here.
pub struct SamDecoder<'a> {
    weights: &'a SamWeights,
    cfg: SamConfig,
    /// `[D, L]` cascaded features, `L = H_p·W_p`.
    features: Vec<f64>,
    /// `[L, A]` projected features plus bias.
    projected: Vec<f64>,
    spatial_softmax: fn(&mut [f64]),
}

#[cfg(feature = "corrupt-softmax")]
const DEFAULT_SPATIAL_SOFTMAX: fn(&mut [f64]) = corrupt_softmax;
#[cfg(not(feature = "corrupt-softmax"))]
const DEFAULT_SPATIAL_SOFTMAX: fn(&mut [f64]) = softmax_in_place;

/// Deliberately broken normalization for fault-injection runs.
pub(crate) fn corrupt_softmax(xs: &mut [f64]) {
    softmax_in_place(xs);
    for x in xs.iter_mut() {
        *x *= 1.01;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<'a> SamDecoder<'a> {
    /// Binds weights to an already cascaded map `F`.
    pub fn new(cascaded: &Tensor, weights: &'a SamWeights, cfg: &SamConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.cascaded_channels();
        let l = cfg.map_h * cfg.map_w;
        if cascaded.shape() != [d, cfg.map_h, cfg.map_w] {
            return Err(Error::shape(format!(
                "cascaded map must be [{d},{},{}], got {:?}",
                cfg.map_h,
                cfg.map_w,
                cascaded.shape()
            )));
        }
        let a = cfg.attn_dim;
        let wf = weights.attn_wf.data();
        let mut projected = vec![0.0; l * a];
        for (loc, row) in projected.chunks_exact_mut(a).enumerate() {
            row.copy_from_slice(weights.attn_b.data());
            for ch in 0..d {
                let f = cascaded.data()[ch * l + loc];
                if f == 0.0 {
                    continue;
                }
                for (k, r) in row.iter_mut().enumerate() {
                    *r += wf[k * d + ch] * f;
                }
            }
        }
        Ok(Self {
            weights,
            cfg: *cfg,
            features: cascaded.data().to_vec(),
            projected,
            spatial_softmax: DEFAULT_SPATIAL_SOFTMAX,
        })
    }

    /// Encodes a raw feature map and binds it.
    pub fn from_features(feat: &Tensor, weights: &'a SamWeights, cfg: &SamConfig) -> Result<Self> {
        let f = encode_features(feat, weights, cfg)?;
        Self::new(&f, weights, cfg)
    }

    pub(crate) fn with_spatial_softmax(mut self, f: fn(&mut [f64])) -> Self {
        self.spatial_softmax = f;
        self
    }

    pub fn config(&self) -> &SamConfig {
        &self.cfg
    }

    /// One decoding step from `state`.
    pub fn step(&self, state: &AttentionState) -> Result<StepOutput> {
        let cfg = &self.cfg;
        let (v, a, d, n) = (cfg.hidden, cfg.attn_dim, cfg.cascaded_channels(), cfg.num_classes);
        let l = cfg.map_h * cfg.map_w;
        if state.hidden.len() != v || state.prev_class >= n {
            return Err(Error::shape(format!(
                "state has hidden size {} and class {}, decoder expects {v} and < {n}",
                state.hidden.len(),
                state.prev_class
            )));
        }
        let w = self.weights;

        // Scores e(l) = W_t · tanh(W_s·s + W_f·F(l) + b).
        let ws = matvec(w.attn_ws.data(), a, v, &state.hidden);
        let wt = w.attn_wt.data();
        let mut alpha: Vec<f64> = self
            .projected
            .chunks_exact(a)
            .map(|row| {
                row.iter()
                    .zip(&ws)
                    .zip(wt)
                    .map(|((p, s), t)| t * (p + s).tanh())
                    .sum()
            })
            .collect();
        (self.spatial_softmax)(&mut alpha);

        let glimpse: Vec<f64> = self
            .features
            .chunks_exact(l)
            .map(|ch| ch.iter().zip(&alpha).map(|(f, al)| f * al).sum())
            .collect();

        // r = [g ; W_y·onehot(y) + b_y]
        let e = cfg.embed_dim;
        let mut rnn_in = Vec::with_capacity(d + e);
        rnn_in.extend_from_slice(&glimpse);
        let wy = w.embed_wy.data();
        rnn_in.extend((0..e).map(|i| wy[i * n + state.prev_class] + w.embed_by.data()[i]));

        let gi: Vec<f64> = matvec(w.rnn_wih.data(), 3 * v, d + e, &rnn_in)
            .into_iter()
            .zip(w.rnn_bih.data())
            .map(|(x, b)| x + b)
            .collect();
        let gh: Vec<f64> = matvec(w.rnn_whh.data(), 3 * v, v, &state.hidden)
            .into_iter()
            .zip(w.rnn_bhh.data())
            .map(|(x, b)| x + b)
            .collect();
        let hidden: Vec<f64> = (0..v)
            .map(|i| {
                let r = sigmoid(gi[i] + gh[i]);
                let z = sigmoid(gi[v + i] + gh[v + i]);
                let cand = (gi[2 * v + i] + r * gh[2 * v + i]).tanh();
                (1.0 - z) * cand + z * state.hidden[i]
            })
            .collect();

        let mut probs: Vec<f64> = matvec(w.out_wo.data(), n, v, &hidden)
            .into_iter()
            .zip(w.out_bo.data())
            .map(|(x, b)| x + b)
            .collect();
        softmax_in_place(&mut probs);

        Ok(StepOutput {
            probs,
            state: AttentionState {
                hidden,
                prev_class: state.prev_class,
                step: state.step + 1,
            },
            alpha: Tensor::new(vec![cfg.map_h, cfg.map_w], alpha)?,
            glimpse,
        })
    }

    pub fn greedy_decode(&self) -> Result<DecodedText> {
        let h = search::greedy(self, EOS, self.cfg.max_steps)?;
        Ok(hypothesis_to_text(&h))
    }

    pub fn beam_decode(&self, k: usize) -> Result<DecodedText> {
        let h = search::beam(self, EOS, k, self.cfg.max_steps)?;
        Ok(hypothesis_to_text(&h))
    }
}

impl StepModel for SamDecoder<'_> {
    type State = AttentionState;

    fn num_classes(&self) -> usize {
        self.cfg.num_classes
    }

    fn initial_state(&self) -> AttentionState {
        AttentionState::initial(&self.cfg)
    }

    fn step(&self, state: &AttentionState) -> Result<(Vec<f64>, AttentionState)> {
        let out = SamDecoder::step(self, state)?;
        Ok((out.probs, out.state))
    }

    fn advance(&self, mut state: AttentionState, token: usize) -> AttentionState {
        state.prev_class = token;
        state
    }
}

/// Text excludes EOS; confidence is the mean chosen-class probability over
/// the non-EOS steps.
pub fn hypothesis_to_text<S>(h: &Hypothesis<S>) -> DecodedText {
    let mut text = String::new();
    let mut char_scores = Vec::new();
    for (&tok, &p) in h.tokens.iter().zip(&h.token_probs) {
        if tok == EOS {
            break;
        }
        text.push(char_of(tok).expect("non-EOS class maps to a character"));
        char_scores.push(p);
    }
    DecodedText {
        text,
        confidence: mean(&char_scores),
        char_scores,
        source: Source::Sam,
        step_probs: Some(h.step_probs.clone()),
    }
}

/// One step on a cascaded map `F`: probabilities, new state and attention.
pub fn attention_step(
    cascaded: &Tensor,
    state: &AttentionState,
    weights: &SamWeights,
    cfg: &SamConfig,
) -> Result<StepOutput> {
    SamDecoder::new(cascaded, weights, cfg)?.step(state)
}

pub fn greedy_decode(feat: &Tensor, weights: &SamWeights, cfg: &SamConfig) -> Result<DecodedText> {
    SamDecoder::from_features(feat, weights, cfg)?.greedy_decode()
}

pub fn beam_decode(feat: &Tensor, weights: &SamWeights, cfg: &SamConfig, k: usize) -> Result<DecodedText> {
    if k == 0 {
        return Err(Error::invalid("beam width must be at least 1"));
    }
    SamDecoder::from_features(feat, weights, cfg)?.beam_decode(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Lcg;

    fn small_cfg() -> SamConfig {
        SamConfig {
            map_h: 2,
            map_w: 4,
            in_channels: 3,
            channels: 4,
            hidden: 6,
            attn_dim: 5,
            embed_dim: 3,
            num_classes: 37,
            max_steps: 8,
            beam_k: 6,
        }
    }

    fn random_feat(cfg: &SamConfig, h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = Lcg::new(seed);
        Tensor::from_fn(&[cfg.in_channels, h, w], |_| rng.uniform(-1.0, 1.0)).unwrap()
    }

    #[test]
    fn position_embedding_layout() {
        let cfg = SamConfig::default();
        let pe = position_embedding(&cfg);
        assert_eq!(pe.shape(), &[40, 8, 32]);
        for row in 0..8 {
            for col in 0..32 {
                let hot: Vec<usize> = (0..40).filter(|&c| pe.at(&[c, row, col]) == 1.0).collect();
                assert_eq!(hot, vec![col, 32 + row]);
                assert_eq!((0..40).map(|c| pe.at(&[c, row, col])).sum::<f64>(), 2.0);
            }
        }
    }

    #[test]
    fn encode_small_shapes() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 1).unwrap();
        let f = encode_features(&random_feat(&cfg, 5, 11, 2), &w, &cfg).unwrap();
        assert_eq!(f.shape(), &[4 + 2 + 4, 2, 4]);
        let pe = position_embedding(&cfg);
        for c in 0..6 {
            assert_eq!(f.outer(4 + c), pe.outer(c));
        }
        assert!(encode_features(&Tensor::full(&[2, 4, 4], 0.0).unwrap(), &w, &cfg).is_err());
    }

    #[test]
    fn constant_propagation_through_conv_stack() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 3).unwrap();
        let w = w
            .with_param("conv1.weight", Tensor::zeros(w.conv1_w.shape()).unwrap(), &cfg)
            .unwrap()
            .with_param("conv2.weight", Tensor::zeros(w.conv2_w.shape()).unwrap(), &cfg)
            .unwrap();
        let f = encode_features(&Tensor::zeros(&[3, 7, 9]).unwrap(), &w, &cfg).unwrap();
        for c in 0..cfg.channels {
            let ch = f.outer(c);
            assert!(ch.iter().all(|&v| v == w.conv2_b.data()[c]));
        }
    }

    #[test]
    fn attention_normalized_and_glimpse_bounded() {
        let cfg = small_cfg();
        let w = SamWeights::random_with_scale(&cfg, 9, 1.0).unwrap();
        let f = encode_features(&random_feat(&cfg, 4, 8, 10), &w, &cfg).unwrap();
        let dec = SamDecoder::new(&f, &w, &cfg).unwrap();
        let mut state = AttentionState::initial(&cfg);
        for t in 0..5 {
            let out = dec.step(&state).unwrap();
            assert!((out.alpha.data().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(out.alpha.data().iter().all(|&a| a >= 0.0));
            assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(out.probs.len(), 37);
            for (c, g) in out.glimpse.iter().enumerate() {
                let ch = f.outer(c);
                let lo = ch.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(*g >= lo - 1e-12 && *g <= hi + 1e-12);
            }
            state = out.state;
            state.prev_class = t + 1;
        }
    }

    #[test]
    fn zero_score_weights_give_uniform_attention() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 4).unwrap();
        let w = w.with_param("attn.W_t", Tensor::zeros(&[1, cfg.attn_dim]).unwrap(), &cfg).unwrap();
        let f = encode_features(&random_feat(&cfg, 4, 8, 5), &w, &cfg).unwrap();
        let out = attention_step(&f, &AttentionState::initial(&cfg), &w, &cfg).unwrap();
        let l = (cfg.map_h * cfg.map_w) as f64;
        assert!(out.alpha.data().iter().all(|&a| (a - 1.0 / l).abs() < 1e-15));
        for (c, g) in out.glimpse.iter().enumerate() {
            let m = f.outer(c).iter().sum::<f64>() / l;
            assert!((g - m).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_permutation_permutes_attention() {
        // Swapping two locations of F (position channels included) swaps alpha.
        let cfg = small_cfg();
        let w = SamWeights::random_with_scale(&cfg, 12, 0.8).unwrap();
        let f = encode_features(&random_feat(&cfg, 4, 8, 13), &w, &cfg).unwrap();
        let (h, wd) = (cfg.map_h, cfg.map_w);
        let swap = |loc: usize| match loc {
            0 => 5,
            5 => 0,
            x => x,
        };
        let permuted = Tensor::from_fn(f.shape(), |i| {
            let loc = swap(i[1] * wd + i[2]);
            f.at(&[i[0], loc / wd, loc % wd])
        })
        .unwrap();
        let s0 = AttentionState::initial(&cfg);
        let a = attention_step(&f, &s0, &w, &cfg).unwrap();
        let b = attention_step(&permuted, &s0, &w, &cfg).unwrap();
        for loc in 0..h * wd {
            assert!((a.alpha.data()[loc] - b.alpha.data()[swap(loc)]).abs() < 1e-15);
        }
        for (x, y) in a.glimpse.iter().zip(&b.glimpse) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn eos_forcing_weights_give_empty_text() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 21).unwrap();
        let mut bias = vec![0.0; 37];
        bias[EOS] = 1e3;
        let w = w
            .with_param("out.W_o", Tensor::zeros(&[37, cfg.hidden]).unwrap(), &cfg)
            .unwrap()
            .with_param("out.b_o", Tensor::from_vec(bias).unwrap(), &cfg)
            .unwrap();
        let feat = random_feat(&cfg, 4, 8, 1);
        let g = greedy_decode(&feat, &w, &cfg).unwrap();
        assert_eq!(g.text, "");
        assert_eq!(g.confidence, 0.0);
        assert_eq!(beam_decode(&feat, &w, &cfg, 6).unwrap().text, "");
    }

    #[test]
    fn never_eos_hits_the_step_cap() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 22).unwrap();
        let mut bias = vec![0.0; 37];
        bias[crate::alphabet::class_of('k').unwrap()] = 1e3;
        let w = w
            .with_param("out.W_o", Tensor::zeros(&[37, cfg.hidden]).unwrap(), &cfg)
            .unwrap()
            .with_param("out.b_o", Tensor::from_vec(bias).unwrap(), &cfg)
            .unwrap();
        let g = greedy_decode(&random_feat(&cfg, 4, 8, 1), &w, &cfg).unwrap();
        assert_eq!(g.text, "k".repeat(cfg.max_steps));
        assert!((g.confidence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_of_one_is_greedy() {
        let cfg = small_cfg();
        for seed in 0..10 {
            let w = SamWeights::random_with_scale(&cfg, seed, 1.5).unwrap();
            let feat = random_feat(&cfg, 4, 8, seed + 100);
            let dec = SamDecoder::from_features(&feat, &w, &cfg).unwrap();
            assert_eq!(dec.greedy_decode().unwrap(), dec.beam_decode(1).unwrap());
        }
        assert!(beam_decode(&random_feat(&cfg, 4, 8, 0), &SamWeights::random(&cfg, 0).unwrap(), &cfg, 0).is_err());
    }

    #[test]
    fn weights_reject_bad_bundles() {
        let cfg = small_cfg();
        let w = SamWeights::random(&cfg, 0).unwrap();
        assert!(w.with_param("out.b_o", Tensor::zeros(&[36]).unwrap(), &cfg).is_err());
        assert!(w.with_param("rnn.extra", Tensor::zeros(&[1]).unwrap(), &cfg).is_err());
        let mut named: std::collections::HashMap<String, Tensor> =
            w.named().into_iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        named.remove("attn.b");
        assert!(SamWeights::from_named(named, &cfg).is_err());
    }

    #[test]
    fn random_weights_reproducible() {
        let cfg = small_cfg();
        assert_eq!(SamWeights::random(&cfg, 5).unwrap(), SamWeights::random(&cfg, 5).unwrap());
        assert_ne!(SamWeights::random(&cfg, 5).unwrap(), SamWeights::random(&cfg, 6).unwrap());
        let w = SamWeights::random(&cfg, 5).unwrap();
        assert!(w.named().iter().all(|(_, t)| t.min() >= -0.1 && t.max() < 0.1));
    }
}
