//! Training objectives.

use crate::events::Label;
use crate::snn::{ForwardTrace, NetworkSpec, Real};

/// Mean over time steps and both output neurons of the squared error
/// between per-step spike counts and the targets.
pub fn mse_step_loss(trace: &ForwardTrace, label: Label, targets: (f32, f32)) -> f64 {
    let steps: Vec<[f64; 2]> = trace
        .output_spikes
        .iter()
        .map(|s| [s[0] as f64, s[1] as f64])
        .collect();
    mse_of_outputs(&steps, label, targets)
}

pub(crate) fn target_vector(label: Label, targets: (f32, f32)) -> [f64; 2] {
    let (hit, miss) = (targets.0 as f64, targets.1 as f64);
    match label {
        Label::Drone => [hit, miss],
        Label::NoDrone => [miss, hit],
    }
}

pub(crate) fn mse_of_outputs(steps: &[[f64; 2]], label: Label, targets: (f32, f32)) -> f64 {
    if steps.is_empty() {
        return 0.0;
    }
    let tv = target_vector(label, targets);
    let sum: f64 = steps
        .iter()
        .map(|s| ((s[0] - tv[0]).powi(2) + (s[1] - tv[1]).powi(2)) / 2.0)
        .sum();
    sum / steps.len() as f64
}

/// `alpha * (s0 - total_sops)^2`.
pub fn sop_loss(total_sops: f64, s0: f64, alpha: f64) -> f64 {
    alpha * (s0 - total_sops).powi(2)
}

/// Sum over layers of the largest absolute weight.
pub fn weight_loss(spec: &NetworkSpec) -> f64 {
    spec.layers
        .iter()
        .map(|l| l.weights.iter().fold(0f32, |m, w| m.max(w.abs())) as f64)
        .sum()
}

/// Subgradient of [`weight_loss`]: `sign(w)` at the lowest-index entry of
/// largest magnitude in each layer, zero elsewhere and for all-zero layers.
pub fn weight_loss_grad<F: Real>(params: &[Vec<F>]) -> Vec<Vec<F>> {
    params
        .iter()
        .map(|w| {
            let mut g = vec![F::zero(); w.len()];
            let mut best: Option<(usize, F)> = None;
            for (i, &x) in w.iter().enumerate() {
                if best.is_none_or(|(_, m)| x.abs() > m) {
                    best = Some((i, x.abs()));
                }
            }
            if let Some((i, m)) = best {
                if m > F::zero() {
                    g[i] = w[i].signum();
                }
            }
            g
        })
        .collect()
}

pub fn total_loss(mse: f64, sop: f64, weight: f64) -> f64 {
    mse + sop + weight
}

/// Softmax cross-entropy of `[drone, no-drone]` scores.
pub fn cross_entropy(scores: [f64; 2], label: Label) -> f64 {
    let m = scores[0].max(scores[1]);
    let lse = m + ((scores[0] - m).exp() + (scores[1] - m).exp()).ln();
    lse - scores[label.index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{LayerSpec, Mode, Shape3};

    fn trace(steps: Vec<[u32; 2]>) -> ForwardTrace {
        ForwardTrace {
            output_spikes: steps,
            ..Default::default()
        }
    }

    #[test]
    fn mse_examples() {
        let t = (1.0, 0.0);
        assert_eq!(mse_step_loss(&trace(vec![[1, 0]; 4]), Label::Drone, t), 0.0);
        assert_eq!(mse_step_loss(&trace(vec![[2, 1]]), Label::Drone, t), 1.0);
        assert_eq!(mse_step_loss(&trace(vec![[0, 0]; 7]), Label::Drone, t), 0.5);
    }

    #[test]
    fn sop_examples() {
        let s0 = 1e5;
        let alpha = 10.0 / (s0 * s0);
        assert_eq!(sop_loss(s0, s0, alpha), 0.0);
        assert!((sop_loss(1.1e5, s0, alpha) - 0.1).abs() < 1e-12);
        assert!((sop_loss(0.9e5, s0, alpha) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn weight_examples() {
        let spec = NetworkSpec {
            input: Shape3::flat(2),
            layers: vec![
                LayerSpec::fc(2, 1).with_weights(vec![0.5, -0.8]),
                LayerSpec::fc(1, 1).with_weights(vec![0.2]),
            ],
            mode: Mode::Relu,
        };
        assert!((weight_loss(&spec) - 1.0).abs() < 1e-7);
        let g = weight_loss_grad(&spec.params());
        assert_eq!(g, vec![vec![0.0, -1.0], vec![1.0]]);
        assert_eq!(weight_loss_grad(&[vec![0.0; 3]]), vec![vec![0.0; 3]]);
        // ties go to the lowest index
        assert_eq!(weight_loss_grad(&[vec![0.3, -0.3]]), vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn total_and_ce() {
        assert_eq!(total_loss(0.5, 0.0, 0.0), 0.5);
        assert!((total_loss(0.5, 0.1, 1.0) - 1.6).abs() < 1e-12);
        assert!((cross_entropy([0.0, 0.0], Label::Drone) - 2f64.ln()).abs() < 1e-12);
        assert!(cross_entropy([10.0, -10.0], Label::Drone) < 1e-8);
    }
}
