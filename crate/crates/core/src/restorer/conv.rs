//! Residual 3x3 convolution stack with hand-written reverse-mode gradients.
//!
//! Input channels are (re, im, t/T); hidden layers have `channels` feature
//! maps followed by ReLU; the last layer emits a 2-channel (re, im) residual
//! that is added back onto the input image. Convolutions use zero padding
//! and keep the spatial size.
//!
//! All arithmetic is f64. Parameters are laid out layer by layer as
//! `weights[out][in][3][3]` followed by `bias[out]`.

use crate::error::{Error, Result};
use crate::numerics::{Complex64, ComplexImage};

const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvArch {
    pub channels: usize,
    pub depth: usize,
}

impl Default for ConvArch {
    fn default() -> Self {
        Self { channels: 16, depth: 4 }
    }
}

impl ConvArch {
    pub const IN_CHANNELS: usize = 3;
    pub const OUT_CHANNELS: usize = 2;

    pub fn new(channels: usize, depth: usize) -> Result<Self> {
        if channels == 0 || depth == 0 {
            return Err(Error::Config(format!("channels and depth must be positive, got C={channels} D={depth}")));
        }
        Ok(Self { channels, depth })
    }

    /// `(in_channels, out_channels)` for every layer.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|l| {
                let cin = if l == 0 { Self::IN_CHANNELS } else { self.channels };
                let cout = if l + 1 == self.depth { Self::OUT_CHANNELS } else { self.channels };
                (cin, cout)
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|&(i, o)| o * i * K * K + o).sum()
    }

    /// Offsets of (weights, bias) blocks for each layer.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut pos = 0;
        self.layers()
            .iter()
            .map(|&(i, o)| {
                let w = pos;
                let b = w + o * i * K * K;
                pos = b + o;
                (w, b)
            })
            .collect()
    }
}

/// Channel-major stack of `h x w` planes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Planes {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Planes {
    fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Encodes an image and step into the 3-channel network input.
pub(crate) fn encode(x: &ComplexImage, time: f64) -> Planes {
    let (h, w) = x.shape();
    let n = h * w;
    let mut data = vec![0.0; 3 * n];
    for (i, z) in x.data().iter().enumerate() {
        data[i] = z.re;
        data[n + i] = z.im;
    }
    data[2 * n..].fill(time);
    Planes {
        channels: 3,
        height: h,
        width: w,
        data,
    }
}

fn shifted_ranges(dy: isize, dx: isize, h: usize, w: usize) -> (usize, usize, usize, usize) {
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy).min(h as isize).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
    (y0, y1, x0, x1)
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn conv_forward(input: &Planes, weights: &[f64], bias: &[f64], out_ch: usize) -> Planes {
    let (h, w, in_ch) = (input.height, input.width, input.channels);
    let n = h * w;
    let mut out = vec![0.0; out_ch * n];
    for o in 0..out_ch {
        let dst_plane = &mut out[o * n..(o + 1) * n];
        dst_plane.fill(bias[o]);
        for i in 0..in_ch {
            let src_plane = input.plane(i);
            for ky in 0..K {
                for kx in 0..K {
                    let wv = weights[((o * in_ch + i) * K + ky) * K + kx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let (y0, y1, x0, x1) = shifted_ranges(dy, dx, h, w);
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx0 = (x0 as isize + dx) as usize;
                        let dst = &mut dst_plane[y * w + x0..y * w + x1];
                        let src = &src_plane[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    Planes {
        channels: out_ch,
        height: h,
        width: w,
        data: out,
    }
}

/// Accumulates weight/bias gradients and optionally the input gradient.
fn conv_backward(
    input: &Planes,
    weights: &[f64],
    grad_out: &Planes,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    want_input_grad: bool,
) -> Option<Planes> {
    let (h, w, in_ch, out_ch) = (input.height, input.width, input.channels, grad_out.channels);
    let n = h * w;
    let mut grad_in = want_input_grad.then(|| vec![0.0; in_ch * n]);
    for o in 0..out_ch {
        let go = grad_out.plane(o);
        grad_b[o] += go.iter().sum::<f64>();
        for i in 0..in_ch {
            let src_plane = input.plane(i);
            for ky in 0..K {
                for kx in 0..K {
                    let idx = ((o * in_ch + i) * K + ky) * K + kx;
                    let wv = weights[idx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let (y0, y1, x0, x1) = shifted_ranges(dy, dx, h, w);
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx0 = (x0 as isize + dx) as usize;
                        let g = &go[y * w + x0..y * w + x1];
                        let s = &src_plane[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        acc += dot(g, s);
                        if let Some(gi) = grad_in.as_mut() {
                            let dst = &mut gi[i * n + sy * w + sx0..i * n + sy * w + sx0 + (x1 - x0)];
                            for (d, gv) in dst.iter_mut().zip(g) {
                                *d += wv * gv;
                            }
                        }
                    }
                    grad_w[idx] += acc;
                }
            }
        }
    }
    grad_in.map(|data| Planes {
        channels: in_ch,
        height: h,
        width: w,
        data,
    })
}

/// Forward pass keeping every layer input for the backward pass.
pub(crate) struct ForwardCache {
    /// `inputs[l]` is the (post-ReLU) input of layer `l`.
    inputs: Vec<Planes>,
    pub output: Planes,
}

pub(crate) fn check_params(arch: &ConvArch, params: &[f64]) -> Result<()> {
    if params.len() != arch.param_count() {
        return Err(Error::shape(
            format!("{} parameters for C={} D={}", arch.param_count(), arch.channels, arch.depth),
            params.len(),
        ));
    }
    Ok(())
}

pub(crate) fn forward(arch: &ConvArch, params: &[f64], input: Planes, keep: bool) -> ForwardCache {
    let layers = arch.layers();
    let offsets = arch.offsets();
    let mut inputs = Vec::with_capacity(if keep { layers.len() } else { 0 });
    let mut current = input;
    for (l, (&(cin, cout), &(wo, bo))) in layers.iter().zip(&offsets).enumerate() {
        let weights = &params[wo..wo + cout * cin * K * K];
        let bias = &params[bo..bo + cout];
        let mut next = conv_forward(&current, weights, bias, cout);
        if l + 1 < layers.len() {
            next.data.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        if keep {
            inputs.push(current);
        }
        current = next;
    }
    ForwardCache { inputs, output: current }
}

/// Gradient of the loss w.r.t. every parameter given the gradient w.r.t. the
/// network output.
pub(crate) fn backward(arch: &ConvArch, params: &[f64], cache: &ForwardCache, grad_output: Planes) -> Vec<f64> {
    let layers = arch.layers();
    let offsets = arch.offsets();
    let mut grads = vec![0.0; params.len()];
    let mut grad = grad_output;
    for l in (0..layers.len()).rev() {
        let (cin, cout) = layers[l];
        let (wo, bo) = offsets[l];
        let weights = &params[wo..wo + cout * cin * K * K];
        let (gw_all, gb_all) = grads.split_at_mut(bo);
        let grad_w = &mut gw_all[wo..wo + cout * cin * K * K];
        let grad_b = &mut gb_all[..cout];
        let input = &cache.inputs[l];
        let grad_in = conv_backward(input, weights, &grad, grad_w, grad_b, l > 0);
        if let Some(mut gi) = grad_in {
            // ReLU: the stored input is post-activation
            for (g, &a) in gi.data.iter_mut().zip(&input.data) {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
            grad = gi;
        }
    }
    grads
}

/// `x + residual` where the residual is the 2-channel network output.
pub(crate) fn apply_residual(x: &ComplexImage, output: &Planes) -> ComplexImage {
    let n = x.height() * x.width();
    let data = x
        .data()
        .iter()
        .enumerate()
        .map(|(i, z)| z + Complex64::new(output.data[i], output.data[n + i]))
        .collect();
    ComplexImage::from_vec(x.height(), x.width(), data).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        assert_eq!(ConvArch::new(4, 1).unwrap().param_count(), 2 * 3 * 9 + 2);
        let a = ConvArch::new(16, 4).unwrap();
        assert_eq!(a.param_count(), (16 * 3 * 9 + 16) + 2 * (16 * 16 * 9 + 16) + (2 * 16 * 9 + 2));
        assert!(ConvArch::new(0, 2).is_err());
    }

    #[test]
    fn conv_matches_direct_sum() {
        // one input channel, one output, compare against explicit neighbourhood sums
        let input = Planes {
            channels: 1,
            height: 4,
            width: 5,
            data: (0..20).map(|v| v as f64 * 0.1 - 0.7).collect(),
        };
        let weights: Vec<f64> = (0..9).map(|v| (v as f64 - 4.0) * 0.3).collect();
        let out = conv_forward(&input, &weights, &[0.25], 1);
        for y in 0..4isize {
            for x in 0..5isize {
                let mut acc = 0.25;
                for ky in 0..3isize {
                    for kx in 0..3isize {
                        let (sy, sx) = (y + ky - 1, x + kx - 1);
                        if (0..4).contains(&sy) && (0..5).contains(&sx) {
                            acc += weights[(ky * 3 + kx) as usize] * input.data[(sy * 5 + sx) as usize];
                        }
                    }
                }
                assert!((out.data[(y * 5 + x) as usize] - acc).abs() < 1e-14);
            }
        }
    }
}
