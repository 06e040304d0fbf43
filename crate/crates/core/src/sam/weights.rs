use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::alphabet::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::rng::Lcg;
use crate::tensor::Tensor;

/// Hyper-parameters of the attention decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamConfig {
    /// Attention map height (H_p).
    pub map_h: usize,
    /// Attention map width (W_p).
    pub map_w: usize,
    /// Channels of the incoming feature map.
    pub in_channels: usize,
    /// Channels after the conv stack (C).
    pub channels: usize,
    /// RNN hidden size (V).
    pub hidden: usize,
    /// Width of the tanh bottleneck that scores attention.
    pub attn_dim: usize,
    /// Width of the previous-character embedding.
    pub embed_dim: usize,
    /// Output classes including EOS (N_c).
    pub num_classes: usize,
    pub max_steps: usize,
    pub beam_k: usize,
}

impl Default for SamConfig {
    fn default() -> Self {
        Self {
            map_h: 8,
            map_w: 32,
            in_channels: 256,
            channels: 256,
            hidden: 256,
            attn_dim: 256,
            embed_dim: 256,
            num_classes: NUM_CLASSES,
            max_steps: 32,
            beam_k: 6,
        }
    }
}

impl SamConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.map_h,
            self.map_w,
            self.in_channels,
            self.channels,
            self.hidden,
            self.attn_dim,
            self.embed_dim,
            self.max_steps,
            self.beam_k,
        ];
        if dims.contains(&0) {
            return Err(Error::invalid(format!("SAM config has a zero dimension: {self:?}")));
        }
        if !(2..=NUM_CLASSES).contains(&self.num_classes) {
            return Err(Error::invalid(format!(
                "num_classes must be in 2..={NUM_CLASSES}, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Channels of the cascaded map: features plus both position one-hots.
    pub fn cascaded_channels(&self) -> usize {
        self.channels + self.map_h + self.map_w
    }

    /// Spatial size the raw feature map is resized to before the conv stack.
    pub fn input_size(&self) -> (usize, usize) {
        (self.map_h * 2, self.map_w * 2)
    }

    /// Canonical parameter names and shapes, in manifest order.
    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (c, v, a, e, n) = (self.channels, self.hidden, self.attn_dim, self.embed_dim, self.num_classes);
        let d = self.cascaded_channels();
        vec![
            ("conv1.weight", vec![c, self.in_channels, 3, 3]),
            ("conv1.bias", vec![c]),
            ("conv2.weight", vec![c, c, 3, 3]),
            ("conv2.bias", vec![c]),
            ("attn.W_t", vec![1, a]),
            ("attn.W_s", vec![a, v]),
            ("attn.W_f", vec![a, d]),
            ("attn.b", vec![a]),
            ("embed.W_y", vec![e, n]),
            ("embed.b_y", vec![e]),
            ("rnn.W_ih", vec![3 * v, d + e]),
            ("rnn.W_hh", vec![3 * v, v]),
            ("rnn.b_ih", vec![3 * v]),
            ("rnn.b_hh", vec![3 * v]),
            ("out.W_o", vec![n, v]),
            ("out.b_o", vec![n]),
        ]
    }
}

/// All trainable arrays of the decoder. The RNN is a GRU with gates ordered
/// reset, update, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SamWeights {
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub attn_wt: Tensor,
    pub attn_ws: Tensor,
    pub attn_wf: Tensor,
    pub attn_b: Tensor,
    pub embed_wy: Tensor,
    pub embed_by: Tensor,
    pub rnn_wih: Tensor,
    pub rnn_whh: Tensor,
    pub rnn_bih: Tensor,
    pub rnn_bhh: Tensor,
    pub out_wo: Tensor,
    pub out_bo: Tensor,
}

impl SamWeights {
    /// Builds weights from named tensors, checking every shape against `cfg`.
    pub fn from_named(mut named: HashMap<String, Tensor>, cfg: &SamConfig) -> Result<Self> {
        cfg.validate()?;
        let mut take = |name: &str, shape: &[usize]| -> Result<Tensor> {
            let t = named
                .remove(name)
                .ok_or_else(|| Error::Weights(format!("missing parameter {name}")))?;
            if t.shape() != shape {
                return Err(Error::Weights(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            Ok(t)
        };
        let shapes = cfg.param_shapes();
        let mut it = shapes.iter().map(|(n, s)| take(n, s));
        let mut next = || it.next().expect("sixteen parameters");
        let w = Self {
            conv1_w: next()?,
            conv1_b: next()?,
            conv2_w: next()?,
            conv2_b: next()?,
            attn_wt: next()?,
            attn_ws: next()?,
            attn_wf: next()?,
            attn_b: next()?,
            embed_wy: next()?,
            embed_by: next()?,
            rnn_wih: next()?,
            rnn_whh: next()?,
            rnn_bih: next()?,
            rnn_bhh: next()?,
            out_wo: next()?,
            out_bo: next()?,
        };
        if let Some(extra) = named.keys().next() {
            return Err(Error::Weights(format!("unknown parameter {extra}")));
        }
        Ok(w)
    }

    /// Uniform `[-0.1, 0.1)` weights from the seeded LCG, filled parameter by
    /// parameter in manifest order.
    pub fn random(cfg: &SamConfig, seed: u64) -> Result<Self> {
        Self::random_with_scale(cfg, seed, 0.1)
    }

    pub fn random_with_scale(cfg: &SamConfig, seed: u64, scale: f64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Lcg::new(seed);
        let named = cfg
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| rng.uniform(-scale, scale)).collect();
                Ok((name.to_string(), Tensor::new(shape, data)?))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Self::from_named(named, cfg)
    }

    /// `(name, tensor)` pairs in manifest order.
    pub fn named(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("conv1.weight", &self.conv1_w),
            ("conv1.bias", &self.conv1_b),
            ("conv2.weight", &self.conv2_w),
            ("conv2.bias", &self.conv2_b),
            ("attn.W_t", &self.attn_wt),
            ("attn.W_s", &self.attn_ws),
            ("attn.W_f", &self.attn_wf),
            ("attn.b", &self.attn_b),
            ("embed.W_y", &self.embed_wy),
            ("embed.b_y", &self.embed_by),
            ("rnn.W_ih", &self.rnn_wih),
            ("rnn.W_hh", &self.rnn_whh),
            ("rnn.b_ih", &self.rnn_bih),
            ("rnn.b_hh", &self.rnn_bhh),
            ("out.W_o", &self.out_wo),
            ("out.b_o", &self.out_bo),
        ]
    }

    /// Returns a copy with one parameter replaced (same shape required).
    pub fn with_param(&self, name: &str, value: Tensor, cfg: &SamConfig) -> Result<Self> {
        let mut named: HashMap<String, Tensor> = self
            .named()
            .into_iter()
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        if !named.contains_key(name) {
            return Err(Error::Weights(format!("unknown parameter {name}")));
        }
        named.insert(name.to_string(), value);
        Self::from_named(named, cfg)
    }
}
