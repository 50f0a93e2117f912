//! Brute-force reference implementations in f64: gather-form loops over
//! every output and kernel tap, no zero skipping, no shared code with the
//! library kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripwire::events::BinnedSample;
use tripwire::snn::{ConvSpec, LayerKind, LayerSpec, Mode, NetworkSpec, Shape3};

/// Gather-form convolution. Also returns the number of (tap, input) weight
/// applications weighted by the input value, which for integer spike
/// counts is the synaptic-operation count.
pub fn conv(input: &[f64], s: Shape3, c: &ConvSpec, w: &[f64]) -> (Vec<f64>, Shape3, f64) {
    let [kh, kw] = c.kernel;
    let oh = (s.h + 2 * c.padding - kh) / c.stride + 1;
    let ow = (s.w + 2 * c.padding - kw) / c.stride + 1;
    let os = Shape3::new(c.out_channels, oh, ow);
    let mut out = vec![0.0; os.len()];
    let mut ops = 0.0;
    for o in 0..c.out_channels {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = 0.0;
                for ci in 0..s.c {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (y * c.stride + ky) as isize - c.padding as isize;
                            let ix = (x * c.stride + kx) as isize - c.padding as isize;
                            if iy < 0 || ix < 0 || iy >= s.h as isize || ix >= s.w as isize {
                                continue;
                            }
                            let v = input[(ci * s.h + iy as usize) * s.w + ix as usize];
                            acc += v * w[((o * s.c + ci) * kh + ky) * kw + kx];
                            ops += v;
                        }
                    }
                }
                out[(o * oh + y) * ow + x] = acc;
            }
        }
    }
    (out, os, ops)
}

pub fn pool(input: &[f64], s: Shape3, f: usize) -> (Vec<f64>, Shape3) {
    let os = Shape3::new(s.c, s.h / f, s.w / f);
    let mut out = vec![0.0; os.len()];
    for c in 0..os.c {
        for y in 0..os.h {
            for x in 0..os.w {
                let mut acc = 0.0;
                for dy in 0..f {
                    for dx in 0..f {
                        acc += input[(c * s.h + y * f + dy) * s.w + x * f + dx];
                    }
                }
                out[(c * os.h + y) * os.w + x] = acc;
            }
        }
    }
    (out, os)
}

pub fn fc(input: &[f64], w: &[f64], n_out: usize) -> (Vec<f64>, f64) {
    let n_in = input.len();
    let out = (0..n_out)
        .map(|o| (0..n_in).map(|i| w[o * n_in + i] * input[i]).sum())
        .collect();
    let ops = input.iter().sum::<f64>() * n_out as f64;
    (out, ops)
}

fn layer_apply(layer: &LayerSpec, x: &[f64], s: Shape3) -> (Vec<f64>, Shape3, f64) {
    let w: Vec<f64> = layer.weights.iter().map(|&v| v as f64).collect();
    match &layer.kind {
        LayerKind::Conv(c) => conv(x, s, c, &w),
        LayerKind::Fc(f) => {
            let (y, ops) = fc(x, &w, f.out_features);
            (y, Shape3::flat(f.out_features), ops)
        }
    }
}

fn flatten(s: Shape3) -> Shape3 {
    Shape3::flat(s.len())
}

/// ReLU network on raw counts, no activation after the last layer.
pub fn ann(spec: &NetworkSpec, counts: &[f64]) -> [f64; 2] {
    let mut x = counts.to_vec();
    let mut s = spec.input;
    let n = spec.layers.len();
    for (l, layer) in spec.layers.iter().enumerate() {
        if matches!(layer.kind, LayerKind::Fc(_)) {
            s = flatten(s);
        }
        let (mut y, ys, _) = layer_apply(layer, &x, s);
        if l + 1 < n {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let f = layer.kind.pool();
        (x, s) = if f > 1 { pool(&y, ys, f) } else { (y, ys) };
    }
    [x[0], x[1]]
}

/// Dense spiking simulation: per-step output spikes and per-layer SOPs.
pub fn snn(spec: &NetworkSpec, sample: &BinnedSample) -> (Vec<[u32; 2]>, Vec<u64>) {
    let dense = sample.to_dense();
    let step_len = spec.input.len();
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut sops = vec![0u64; spec.layers.len()];
    let mut out = Vec::new();
    for t in 0..sample.steps() {
        let mut x: Vec<f64> = dense[t * step_len..(t + 1) * step_len].iter().map(|&c| c as f64).collect();
        let mut s = spec.input;
        for (l, layer) in spec.layers.iter().enumerate() {
            if matches!(layer.kind, LayerKind::Fc(_)) {
                s = flatten(s);
            }
            let (drive, ys, ops) = layer_apply(layer, &x, s);
            sops[l] += ops as u64;
            if v.len() <= l {
                v.push(vec![0.0; drive.len()]);
            }
            let theta = layer.threshold as f64;
            let spikes: Vec<f64> = drive
                .iter()
                .zip(v[l].iter_mut())
                .map(|(d, m)| {
                    let u = (*m + d).max(-theta);
                    let n = if u >= theta { (u / theta).floor() } else { 0.0 };
                    *m = u - n * theta;
                    n
                })
                .collect();
            let f = layer.kind.pool();
            (x, s) = if f > 1 { pool(&spikes, ys, f) } else { (spikes, ys) };
        }
        out.push([x[0] as u32, x[1] as u32]);
    }
    (out, sops)
}

/// Random small network on an 8x8 input: one or two convs (pool 1 or 2)
/// then one or two fc layers. With `dyadic` the weights are multiples of
/// 1/8 in [-1, 1] and thresholds are powers of two, so every float sum is
/// exact in any order.
pub fn random_network(seed: u64, mode: Mode, dyadic: bool) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| -> f32 {
        if dyadic {
            rng.random_range(-8i32..=8) as f32 / 8.0
        } else {
            rng.random_range(-1.0f32..1.0)
        }
    };
    let mut layers = Vec::new();
    let mut s = Shape3::new(mode.input_channels(), 8, 8);
    let n_conv = rng.random_range(1..=2);
    for _ in 0..n_conv {
        let k = if rng.random_bool(0.5) { 3 } else { 1 };
        let pool = if rng.random_bool(0.5) { 2 } else { 1 };
        let oc = rng.random_range(1..=4);
        let c = ConvSpec::new(s.c, oc, k, pool);
        let w = (0..c.weight_count()).map(|_| weight(&mut rng)).collect();
        let theta = [0.5f32, 1.0, 2.0][rng.random_range(0..3)];
        layers.push(LayerSpec::conv(c).with_weights(w).with_threshold(theta));
        s = Shape3::new(oc, s.h / pool, s.w / pool);
    }
    let mut n_in = s.len();
    if rng.random_bool(0.5) {
        let hidden = rng.random_range(3..=6);
        let w = (0..n_in * hidden).map(|_| weight(&mut rng)).collect();
        layers.push(LayerSpec::fc(n_in, hidden).with_weights(w));
        n_in = hidden;
    }
    let w = (0..n_in * 2).map(|_| weight(&mut rng)).collect();
    layers.push(LayerSpec::fc(n_in, 2).with_weights(w));
    NetworkSpec {
        input: Shape3::new(mode.input_channels(), 8, 8),
        layers,
        mode,
    }
}
