//! Helpers shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod checks;
pub mod dense;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripwire::events::{BinnedSample, Label};
use tripwire::snn::{ConvSpec, LayerSpec, Mode, NetworkSpec, Shape3};
use tripwire::train::{sample_grad, BpttOptions};

/// Two sum-pooled convolutions and one fully connected layer on a 2x4x4
/// input.
pub fn toy_network(seed: u64) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1 = ConvSpec::new(2, 3, 3, 2);
    let c2 = ConvSpec::new(3, 4, 3, 1);
    let mut rand_w = |n: usize, scale: f32| -> Vec<f32> {
        (0..n).map(|_| rng.random_range(-0.6..1.0f32) * scale).collect()
    };
    NetworkSpec {
        input: Shape3::new(2, 4, 4),
        layers: vec![
            LayerSpec::conv(c1).with_weights(rand_w(c1.weight_count(), 1.2)),
            LayerSpec::conv(c2).with_weights(rand_w(c2.weight_count(), 1.0)),
            LayerSpec::fc(16, 2).with_weights(rand_w(32, 1.0)),
        ],
        mode: Mode::Spiking,
    }
}

pub fn random_sample(seed: u64, h: usize, w: usize, steps: usize, per_step: usize) -> BinnedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..steps)
        .map(|_| {
            (0..per_step)
                .map(|_| (rng.random_range(0..(2 * h * w) as u32), rng.random_range(1..4)))
                .collect()
        })
        .collect();
    BinnedSample::from_step_entries(h, w, 1000, entries).unwrap()
}

/// Largest norm-wise relative error between soft-mode BPTT gradients and
/// central finite differences of the total loss, over `seeds`.
pub fn soft_gradient_check(seeds: std::ops::Range<u64>, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in seeds {
        let spec = toy_network(seed);
        let params: Vec<Vec<f64>> = spec
            .params()
            .iter()
            .map(|p| p.iter().map(|&w| w as f64).collect())
            .collect();
        let sample = random_sample(seed + 100, 4, 4, 6, 5);
        let label = if seed % 2 == 0 { Label::Drone } else { Label::NoDrone };
        let opts = BpttOptions {
            soft: true,
            sop: Some((150.0, 10.0 / 150.0f64.powi(2))),
            weight_penalty: true,
            ..Default::default()
        };
        let loss = |p: &[Vec<f64>]| -> f64 {
            let g = sample_grad(&spec, p, &sample, label, &opts).unwrap();
            let w: f64 = p
                .iter()
                .map(|l| l.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .sum();
            g.mse + g.sop_loss + w
        };
        let g = sample_grad(&spec, &params, &sample, label, &opts).unwrap();
        let mut analytic = g.grads.clone();
        for (a, s) in analytic.iter_mut().zip(tripwire::train::weight_loss_grad(&params)) {
            for (x, y) in a.iter_mut().zip(s) {
                *x += y;
            }
        }
        let (mut diff, mut na, mut nf) = (0.0, 0.0, 0.0);
        for l in 0..params.len() {
            for i in 0..params[l].len() {
                let mut up = params.clone();
                up[l][i] += h;
                let mut down = params.clone();
                down[l][i] -= h;
                let fd = (loss(&up) - loss(&down)) / (2.0 * h);
                diff += (fd - analytic[l][i]).powi(2);
                na += analytic[l][i].powi(2);
                nf += fd.powi(2);
            }
        }
        let rel = diff.sqrt() / na.sqrt().max(nf.sqrt()).max(1e-300);
        worst = worst.max(rel);
    }
    worst
}
