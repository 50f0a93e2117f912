//! Convolution, fully connected and sum-pool kernels plus their gradients.
//!
//! Forward kernels scatter from non-zero inputs, so their cost follows the
//! number of synaptic operations rather than the dense layer size. All of
//! them accumulate into caller-provided buffers.

use crate::error::{Error, Result};

use super::layer::{ConvSpec, Shape3};
use super::Real;

/// Output row/column reached by input coordinate `i` through kernel tap `k`.
#[inline]
fn out_coord(i: usize, k: usize, pad: usize, stride: usize, limit: usize) -> Option<usize> {
    let num = i + pad;
    if num < k {
        return None;
    }
    let num = num - k;
    if num % stride != 0 {
        return None;
    }
    let o = num / stride;
    (o < limit).then_some(o)
}

/// `out += conv(input)`, skipping zero inputs.
pub(crate) fn conv2d_accumulate<F: Real>(
    input: &[F],
    in_shape: Shape3,
    conv: &ConvSpec,
    weights: &[F],
    out: &mut [F],
    out_shape: Shape3,
) {
    let [kh, kw] = conv.kernel;
    let taps = kh * kw;
    let plane = out_shape.plane();
    for c in 0..in_shape.c {
        for y in 0..in_shape.h {
            for x in 0..in_shape.w {
                let a = input[(c * in_shape.h + y) * in_shape.w + x];
                if a == F::zero() {
                    continue;
                }
                for ky in 0..kh {
                    let Some(oy) = out_coord(y, ky, conv.padding, conv.stride, out_shape.h) else {
                        continue;
                    };
                    for kx in 0..kw {
                        let Some(ox) = out_coord(x, kx, conv.padding, conv.stride, out_shape.w)
                        else {
                            continue;
                        };
                        let base = oy * out_shape.w + ox;
                        let wbase = c * taps + ky * kw + kx;
                        let wstride = in_shape.c * taps;
                        for oc in 0..out_shape.c {
                            out[oc * plane + base] += a * weights[oc * wstride + wbase];
                        }
                    }
                }
            }
        }
    }
}

/// `grad_w += d(out)/d(w)^T grad_out`, skipping zero inputs.
pub(crate) fn conv2d_grad_weights<F: Real>(
    input: &[F],
    in_shape: Shape3,
    conv: &ConvSpec,
    grad_out: &[F],
    out_shape: Shape3,
    grad_w: &mut [F],
) {
    let [kh, kw] = conv.kernel;
    let taps = kh * kw;
    let plane = out_shape.plane();
    let wstride = in_shape.c * taps;
    for c in 0..in_shape.c {
        for y in 0..in_shape.h {
            for x in 0..in_shape.w {
                let a = input[(c * in_shape.h + y) * in_shape.w + x];
                if a == F::zero() {
                    continue;
                }
                for ky in 0..kh {
                    let Some(oy) = out_coord(y, ky, conv.padding, conv.stride, out_shape.h) else {
                        continue;
                    };
                    for kx in 0..kw {
                        let Some(ox) = out_coord(x, kx, conv.padding, conv.stride, out_shape.w)
                        else {
                            continue;
                        };
                        let base = oy * out_shape.w + ox;
                        let wbase = c * taps + ky * kw + kx;
                        for oc in 0..out_shape.c {
                            grad_w[oc * wstride + wbase] += a * grad_out[oc * plane + base];
                        }
                    }
                }
            }
        }
    }
}

/// `grad_in += W^T grad_out`, skipping zero output gradients.
pub(crate) fn conv2d_grad_input<F: Real>(
    grad_out: &[F],
    out_shape: Shape3,
    conv: &ConvSpec,
    weights: &[F],
    in_shape: Shape3,
    grad_in: &mut [F],
) {
    let [kh, kw] = conv.kernel;
    let taps = kh * kw;
    let (pad, s) = (conv.padding as isize, conv.stride as isize);
    for oc in 0..out_shape.c {
        for oy in 0..out_shape.h {
            for ox in 0..out_shape.w {
                let g = grad_out[(oc * out_shape.h + oy) * out_shape.w + ox];
                if g == F::zero() {
                    continue;
                }
                for ky in 0..kh {
                    let iy = oy as isize * s - pad + ky as isize;
                    if iy < 0 || iy >= in_shape.h as isize {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = ox as isize * s - pad + kx as isize;
                        if ix < 0 || ix >= in_shape.w as isize {
                            continue;
                        }
                        let ipos = iy as usize * in_shape.w + ix as usize;
                        let wbase = oc * in_shape.c * taps + ky * kw + kx;
                        for c in 0..in_shape.c {
                            grad_in[c * in_shape.plane() + ipos] += g * weights[wbase + c * taps];
                        }
                    }
                }
            }
        }
    }
}

/// Zero-padded cross-correlation without bias.
pub fn conv2d<F: Real>(
    input: &[F],
    in_shape: Shape3,
    conv: &ConvSpec,
    weights: &[F],
) -> Result<(Vec<F>, Shape3)> {
    if input.len() != in_shape.len() {
        return Err(Error::Shape(format!(
            "input has {} elements, shape {in_shape} needs {}",
            input.len(),
            in_shape.len()
        )));
    }
    if weights.len() != conv.weight_count() {
        return Err(Error::Shape(format!(
            "conv has {} weights, expected {}",
            weights.len(),
            conv.weight_count()
        )));
    }
    let out_shape = conv.output_shape(in_shape)?;
    let mut out = vec![F::zero(); out_shape.len()];
    conv2d_accumulate(input, in_shape, conv, weights, &mut out, out_shape);
    Ok((out, out_shape))
}

/// `out += W x` for a `[out][in]` weight matrix, skipping zero inputs.
pub(crate) fn fc_accumulate<F: Real>(input: &[F], weights: &[F], out: &mut [F]) {
    let n_in = input.len();
    for (i, &a) in input.iter().enumerate() {
        if a == F::zero() {
            continue;
        }
        for (o, acc) in out.iter_mut().enumerate() {
            *acc += a * weights[o * n_in + i];
        }
    }
}

pub(crate) fn fc_grad_weights<F: Real>(input: &[F], grad_out: &[F], grad_w: &mut [F]) {
    let n_in = input.len();
    for (i, &a) in input.iter().enumerate() {
        if a == F::zero() {
            continue;
        }
        for (o, &g) in grad_out.iter().enumerate() {
            grad_w[o * n_in + i] += a * g;
        }
    }
}

pub(crate) fn fc_grad_input<F: Real>(grad_out: &[F], weights: &[F], grad_in: &mut [F]) {
    let n_in = grad_in.len();
    for (o, &g) in grad_out.iter().enumerate() {
        if g == F::zero() {
            continue;
        }
        let row = &weights[o * n_in..(o + 1) * n_in];
        for (gi, &w) in grad_in.iter_mut().zip(row) {
            *gi += g * w;
        }
    }
}

/// Fully connected layer `W x` without bias.
pub fn fully_connected<F: Real>(input: &[F], weights: &[F], out_features: usize) -> Result<Vec<F>> {
    if weights.len() != input.len() * out_features {
        return Err(Error::Shape(format!(
            "fc has {} weights, expected {}x{}",
            weights.len(),
            out_features,
            input.len()
        )));
    }
    let mut out = vec![F::zero(); out_features];
    fc_accumulate(input, weights, &mut out);
    Ok(out)
}

pub(crate) fn sum_pool_into<F: Real>(input: &[F], shape: Shape3, factor: usize, out: &mut [F]) {
    let (oh, ow) = (shape.h / factor, shape.w / factor);
    out.fill(F::zero());
    for c in 0..shape.c {
        for y in 0..shape.h {
            let orow = (c * oh + y / factor) * ow;
            let irow = (c * shape.h + y) * shape.w;
            for x in 0..shape.w {
                out[orow + x / factor] += input[irow + x];
            }
        }
    }
}

/// Gradient of a sum pool: each input cell receives its block's gradient.
pub(crate) fn sum_pool_backward<F: Real>(
    grad_pooled: &[F],
    shape: Shape3,
    factor: usize,
    grad_in: &mut [F],
) {
    let (oh, ow) = (shape.h / factor, shape.w / factor);
    for c in 0..shape.c {
        for y in 0..shape.h {
            let orow = (c * oh + y / factor) * ow;
            let irow = (c * shape.h + y) * shape.w;
            for x in 0..shape.w {
                grad_in[irow + x] = grad_pooled[orow + x / factor];
            }
        }
    }
}

/// Sums non-overlapping `factor x factor` blocks.
pub fn sum_pool<F: Real>(input: &[F], shape: Shape3, factor: usize) -> Result<(Vec<F>, Shape3)> {
    if factor == 0 || shape.h % factor != 0 || shape.w % factor != 0 {
        return Err(Error::Shape(format!(
            "sum-pool factor {factor} does not divide {}x{}",
            shape.h, shape.w
        )));
    }
    if input.len() != shape.len() {
        return Err(Error::Shape(format!(
            "input has {} elements, shape {shape} needs {}",
            input.len(),
            shape.len()
        )));
    }
    let out_shape = Shape3::new(shape.c, shape.h / factor, shape.w / factor);
    let mut out = vec![F::zero(); out_shape.len()];
    sum_pool_into(input, shape, factor, &mut out);
    Ok((out, out_shape))
}

/// Synaptic fan-out of one input spike at each spatial position of a conv
/// input: output channels times the number of in-bounds output positions
/// whose receptive field contains it. Indexed `y * w + x`.
pub fn conv_fanout(in_shape: Shape3, conv: &ConvSpec) -> Result<Vec<u64>> {
    let out = conv.output_shape(in_shape)?;
    let reach = |len: usize, k: usize, out_len: usize| -> Vec<u64> {
        (0..len)
            .map(|i| {
                (0..k)
                    .filter(|&tap| out_coord(i, tap, conv.padding, conv.stride, out_len).is_some())
                    .count() as u64
            })
            .collect()
    };
    let ry = reach(in_shape.h, conv.kernel[0], out.h);
    let rx = reach(in_shape.w, conv.kernel[1], out.w);
    let mut fan = Vec::with_capacity(in_shape.plane());
    for &cy in &ry {
        for &cx in &rx {
            fan.push(cy * cx * conv.out_channels as u64);
        }
    }
    Ok(fan)
}
