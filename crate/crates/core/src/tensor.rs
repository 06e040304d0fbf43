//! Dense row-major `f64` tensors and the handful of forward kernels the
//! decoders and losses need.
//!
//! Tensors have rank 1 to 4 and are immutable once built; every kernel
//! returns a fresh tensor.

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking rank, extents, length and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_RANK {
            return Err(Error::shape(format!(
                "rank must be between 1 and {MAX_RANK}, got {}",
                shape.len()
            )));
        }
        if shape.contains(&0) {
            return Err(Error::shape(format!("zero extent in shape {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {numel} values, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite tensor value {v}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        let numel: usize = shape.iter().product();
        Self::new(shape.to_vec(), vec![value; numel])
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..numel {
            data.push(f(&idx));
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(shape.to_vec(), data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank mismatch");
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {idx:?} out of bounds for {:?}", self.shape);
            acc * n + i
        })
    }

    /// Element at a full multi-index. Panics when out of bounds.
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.data.clone())
    }

    /// Contiguous slice of the outermost dimension, e.g. one channel of a
    /// `[C,H,W]` map.
    pub fn outer(&self, i: usize) -> &[f64] {
        let inner: usize = self.shape[1..].iter().product();
        &self.data[i * inner..(i + 1) * inner]
    }

    /// Stacks tensors along the outermost axis; trailing extents must agree.
    pub fn concat_outer(parts: &[&Tensor]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat of zero tensors"))?;
        let tail = &first.shape[1..];
        let mut outer = 0;
        let mut data = Vec::new();
        for p in parts {
            if &p.shape[1..] != tail {
                return Err(Error::shape(format!(
                    "cannot concat {:?} with {:?}",
                    first.shape, p.shape
                )));
            }
            outer += p.shape[0];
            data.extend_from_slice(&p.data);
        }
        let mut shape = vec![outer];
        shape.extend_from_slice(tail);
        Self::new(shape, data)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn dims3(&self, what: &str) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::shape(format!(
                "{what} expects a [C,H,W] tensor, got {:?}",
                self.shape
            ))),
        }
    }

    /// Per-channel bilinear interpolation with corner-aligned sampling.
    pub fn bilinear_resize(&self, out_h: usize, out_w: usize) -> Result<Self> {
        let (c, h, w) = self.dims3("bilinear_resize")?;
        if out_h == 0 || out_w == 0 {
            return Err(Error::invalid("bilinear_resize target extent must be positive"));
        }
        if out_h == h && out_w == w {
            return Ok(self.clone());
        }
        let ys = sample_axis(h, out_h);
        let xs = sample_axis(w, out_w);
        let mut out = Vec::with_capacity(c * out_h * out_w);
        for ch in 0..c {
            let plane = self.outer(ch);
            for &(y0, y1, fy) in &ys {
                let r0 = &plane[y0 * w..(y0 + 1) * w];
                let r1 = &plane[y1 * w..(y1 + 1) * w];
                for &(x0, x1, fx) in &xs {
                    let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
                    let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
                    out.push(top + (bottom - top) * fy);
                }
            }
        }
        Self::new(vec![c, out_h, out_w], out)
    }

    /// Zero-padded cross-correlation. `kernel` is `[K,C,kh,kw]`, `bias` is `[K]`.
    pub fn conv2d(&self, kernel: &Tensor, bias: &Tensor, stride: usize, pad: usize) -> Result<Self> {
        let (c, h, w) = self.dims3("conv2d")?;
        let (k, kc, kh, kw) = match kernel.shape[..] {
            [k, kc, kh, kw] => (k, kc, kh, kw),
            _ => {
                return Err(Error::shape(format!(
                    "conv2d kernel must be [K,C,kh,kw], got {:?}",
                    kernel.shape
                )))
            }
        };
        if kc != c {
            return Err(Error::shape(format!(
                "conv2d kernel expects {kc} input channels, input has {c}"
            )));
        }
        if bias.shape != [k] {
            return Err(Error::shape(format!(
                "conv2d bias must be [{k}], got {:?}",
                bias.shape
            )));
        }
        if stride == 0 {
            return Err(Error::invalid("conv2d stride must be positive"));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(Error::shape(format!(
                "conv2d kernel {kh}x{kw} larger than padded input {}x{}",
                h + 2 * pad,
                w + 2 * pad
            )));
        }
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (w + 2 * pad - kw) / stride + 1;
        let mut out = vec![0.0; k * oh * ow];
        for (ko, out_plane) in out.chunks_exact_mut(oh * ow).enumerate() {
            out_plane.fill(bias.data[ko]);
            for ci in 0..c {
                let plane = self.outer(ci);
                let wbase = ((ko * c) + ci) * kh * kw;
                for dy in 0..kh {
                    for dx in 0..kw {
                        let wv = kernel.data[wbase + dy * kw + dx];
                        if wv == 0.0 {
                            continue;
                        }
                        // Output columns whose source column lands inside the input.
                        let ox_lo = pad.saturating_sub(dx).div_ceil(stride);
                        let ox_hi = ((w + pad).saturating_sub(dx)).div_ceil(stride).min(ow);
                        if ox_lo >= ox_hi {
                            continue;
                        }
                        for oy in 0..oh {
                            let iy = oy * stride + dy;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let row = &plane[(iy - pad) * w..(iy - pad + 1) * w];
                            let dst = &mut out_plane[oy * ow..(oy + 1) * ow];
                            if stride == 1 {
                                let ix_lo = ox_lo + dx - pad;
                                let n = ox_hi - ox_lo;
                                for (d, s) in dst[ox_lo..ox_hi].iter_mut().zip(&row[ix_lo..ix_lo + n]) {
                                    *d += wv * s;
                                }
                            } else {
                                for (ox, d) in dst.iter_mut().enumerate().take(ox_hi).skip(ox_lo) {
                                    *d += wv * row[ox * stride + dx - pad];
                                }
                            }
                        }
                    }
                }
            }
        }
        Self::new(vec![k, oh, ow], out)
    }

    /// Per-window maximum over `k x k` windows.
    pub fn maxpool2d(&self, k: usize, stride: usize) -> Result<Self> {
        let (c, h, w) = self.dims3("maxpool2d")?;
        if k == 0 || stride == 0 {
            return Err(Error::invalid("maxpool2d window and stride must be positive"));
        }
        if h < k || w < k {
            return Err(Error::shape(format!(
                "maxpool2d window {k} larger than input {h}x{w}"
            )));
        }
        let oh = (h - k) / stride + 1;
        let ow = (w - k) / stride + 1;
        let mut out = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            let plane = self.outer(ch);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut m = f64::NEG_INFINITY;
                    for dy in 0..k {
                        let row = (oy * stride + dy) * w + ox * stride;
                        for v in &plane[row..row + k] {
                            m = m.max(*v);
                        }
                    }
                    out.push(m);
                }
            }
        }
        Self::new(vec![c, oh, ow], out)
    }

    /// Affine map `weight · self + bias` for a vector input.
    pub fn linear(&self, weight: &Tensor, bias: &Tensor) -> Result<Self> {
        let n = match self.shape[..] {
            [n] => n,
            _ => return Err(Error::shape(format!("linear expects a vector, got {:?}", self.shape))),
        };
        let m = match weight.shape[..] {
            [m, wn] if wn == n => m,
            _ => {
                return Err(Error::shape(format!(
                    "linear weight {:?} incompatible with input of length {n}",
                    weight.shape
                )))
            }
        };
        if bias.shape != [m] {
            return Err(Error::shape(format!(
                "linear bias must be [{m}], got {:?}",
                bias.shape
            )));
        }
        let out = matvec(&weight.data, m, n, &self.data)
            .into_iter()
            .zip(&bias.data)
            .map(|(v, b)| v + b)
            .collect();
        Self::new(vec![m], out)
    }

    /// Numerically stable softmax along `axis`.
    pub fn softmax(&self, axis: usize) -> Result<Self> {
        if axis >= self.rank() {
            return Err(Error::invalid(format!(
                "softmax axis {axis} invalid for rank {}",
                self.rank()
            )));
        }
        let len = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let mut out = self.data.clone();
        let mut lane = vec![0.0; len];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                for (a, slot) in lane.iter_mut().enumerate() {
                    *slot = self.data[base + a * inner];
                }
                softmax_in_place(&mut lane);
                for (a, v) in lane.iter().enumerate() {
                    out[base + a * inner] = *v;
                }
            }
        }
        Self::new(self.shape.clone(), out)
    }
}

/// Source sample positions for corner-aligned resampling: (lo, hi, frac).
fn sample_axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|d| {
            let pos = if dst > 1 {
                d as f64 * (src - 1) as f64 / (dst - 1) as f64
            } else {
                0.0
            };
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// In-place max-subtracted softmax over a slice.
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// Row-major `[m,n] x [n]` product.
pub(crate) fn matvec(w: &[f64], m: usize, n: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.len(), m * n);
    debug_assert_eq!(x.len(), n);
    w.chunks_exact(n)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}
