//! Backpropagation through time for the spiking network.
//!
//! Every layer step computes `vpre = v + W x`, `u = max(clamp, vpre)`,
//! `n = spike(u)`, `v = u - theta * n`, then sum-pools `n` for the next
//! layer. The backward pass replaces `dn/du` by the surrogate, keeps the
//! reset path (`dv/du = 1 - theta * dn/du`) and blocks gradient where the
//! clamp is active.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{BinnedSample, Label};
use crate::snn::ops;
use crate::snn::{conv_fanout, integrate_fire, LayerKind, LayerShapes, Mode, NetworkSpec, Real};

use super::loss::weight_loss_grad;
use super::surrogate::{soft_spike, surrogate_grad};

/// Knobs of one gradient evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpttOptions {
    /// Replace the floor by [`soft_spike`] in the forward pass.
    pub soft: bool,
    pub beta: f64,
    /// `(correct, incorrect)` per-step target spike counts.
    pub targets: (f64, f64),
    /// `(s0, alpha)` when the synaptic-operation penalty is on.
    pub sop: Option<(f64, f64)>,
    /// Add the max-weight penalty once per batch.
    pub weight_penalty: bool,
}

impl Default for BpttOptions {
    fn default() -> Self {
        Self {
            soft: false,
            beta: 10.0,
            targets: (1.0, 0.0),
            sop: None,
            weight_penalty: false,
        }
    }
}

/// Loss terms and gradient of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrad<F> {
    pub mse: F,
    pub sop_loss: F,
    /// Synaptic operations of the (possibly relaxed) forward pass.
    pub sops: F,
    /// Output spike counts per step.
    pub outputs: Vec<[F; 2]>,
    pub grads: Vec<Vec<F>>,
}

/// Averaged loss terms and gradient of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGrad<F> {
    /// `mse + sop_loss + weight_loss`.
    pub loss: F,
    pub mse: F,
    pub sop_loss: F,
    pub weight_loss: F,
    pub mean_sops: F,
    pub grads: Vec<Vec<F>>,
}

struct Topology<F> {
    shapes: Vec<LayerShapes>,
    thresholds: Vec<F>,
    /// Fan-out of each input element of each layer.
    fan: Vec<Vec<F>>,
}

fn topology<F: Real>(spec: &NetworkSpec, params: &[Vec<F>]) -> Result<Topology<F>> {
    if spec.mode != Mode::Spiking {
        return Err(Error::InvalidConfig("BPTT needs a spiking network".into()));
    }
    spec.check()?;
    if params.len() != spec.layers.len()
        || params
            .iter()
            .zip(&spec.layers)
            .any(|(p, l)| p.len() != l.kind.weight_count())
    {
        return Err(Error::Shape("parameters do not match the network".into()));
    }
    let shapes = spec.layer_shapes()?;
    let fan = spec
        .layers
        .iter()
        .zip(&shapes)
        .map(|(l, s)| -> Result<Vec<F>> {
            Ok(match &l.kind {
                LayerKind::Conv(c) => {
                    let plane = conv_fanout(s.input, c)?;
                    (0..s.input.len())
                        .map(|i| F::from_u64(plane[i % s.input.plane()]).unwrap())
                        .collect()
                }
                LayerKind::Fc(f) => vec![F::from_usize(f.out_features).unwrap(); s.input.len()],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Topology {
        shapes,
        thresholds: spec.layers.iter().map(|l| F::of_f32(l.threshold)).collect(),
        fan,
    })
}

fn apply<F: Real>(kind: &LayerKind, s: &LayerShapes, w: &[F], x: &[F], out: &mut [F]) {
    out.fill(F::zero());
    match kind {
        LayerKind::Conv(c) => ops::conv2d_accumulate(x, s.input, c, w, out, s.output),
        LayerKind::Fc(_) => ops::fc_accumulate(x, w, out),
    }
}

/// Forward and backward pass of one labelled sample.
pub fn sample_grad<F: Real>(
    spec: &NetworkSpec,
    params: &[Vec<F>],
    sample: &BinnedSample,
    label: Label,
    opts: &BpttOptions,
) -> Result<SampleGrad<F>> {
    let topo = topology(spec, params)?;
    sample_grad_with(spec, &topo, params, sample, label, opts)
}

fn sample_grad_with<F: Real>(
    spec: &NetworkSpec,
    topo: &Topology<F>,
    params: &[Vec<F>],
    sample: &BinnedSample,
    label: Label,
    opts: &BpttOptions,
) -> Result<SampleGrad<F>> {
    if sample.height() != spec.input.h || sample.width() != spec.input.w {
        return Err(Error::Shape(format!(
            "sample is {}x{}, network expects {}x{}",
            sample.height(),
            sample.width(),
            spec.input.h,
            spec.input.w
        )));
    }
    let n_layers = spec.layers.len();
    let steps = sample.steps();
    let beta = F::from_f64(opts.beta).unwrap();
    let shapes = &topo.shapes;
    let th = &topo.thresholds;
    let clamp: Vec<F> = th.iter().map(|&t| -t).collect();

    // Tape: layer inputs and pre-clamp membranes for every step.
    let mut inputs: Vec<Vec<Vec<F>>> = Vec::with_capacity(steps);
    let mut vpres: Vec<Vec<Vec<F>>> = Vec::with_capacity(steps);
    let mut outputs: Vec<[F; 2]> = Vec::with_capacity(steps);
    let mut membrane: Vec<Vec<F>> = shapes.iter().map(|s| vec![F::zero(); s.output.len()]).collect();
    let mut drive: Vec<Vec<F>> = membrane.clone();
    let mut sops = F::zero();

    for t in 0..steps {
        let mut x = vec![F::zero(); spec.input.len()];
        for &(idx, count) in sample.step_entries(t) {
            x[idx as usize] = F::from_u32(count).unwrap();
        }
        let mut step_inputs = Vec::with_capacity(n_layers);
        let mut step_vpre = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let s = &shapes[l];
            sops += x
                .iter()
                .zip(&topo.fan[l])
                .filter(|(v, _)| **v != F::zero())
                .map(|(v, f)| *v * *f)
                .sum::<F>();
            apply(&spec.layers[l].kind, s, &params[l], &x, &mut drive[l]);
            let mut vpre = vec![F::zero(); s.output.len()];
            let mut n = vec![F::zero(); s.output.len()];
            for i in 0..n.len() {
                let v = &mut membrane[l][i];
                vpre[i] = *v + drive[l][i];
                if opts.soft {
                    let u = vpre[i].max(clamp[l]);
                    n[i] = soft_spike(u, th[l], beta);
                    *v = u - th[l] * n[i];
                } else {
                    n[i] = integrate_fire(v, drive[l][i], th[l], clamp[l]);
                }
            }
            let pool = spec.layers[l].kind.pool();
            let out = if pool > 1 {
                let mut p = vec![F::zero(); s.pooled.len()];
                ops::sum_pool_into(&n, s.output, pool, &mut p);
                p
            } else {
                n
            };
            step_inputs.push(std::mem::replace(&mut x, out));
            step_vpre.push(vpre);
        }
        outputs.push([x[0], x[1]]);
        inputs.push(step_inputs);
        vpres.push(step_vpre);
    }

    let tv = super::loss::target_vector(label, (opts.targets.0 as f32, opts.targets.1 as f32));
    let tv = [F::from_f64(tv[0]).unwrap(), F::from_f64(tv[1]).unwrap()];
    let two = F::one() + F::one();
    let t_count = F::from_usize(steps.max(1)).unwrap();
    let mse = outputs
        .iter()
        .map(|o| ((o[0] - tv[0]).powi(2) + (o[1] - tv[1]).powi(2)) / two)
        .sum::<F>()
        / t_count;
    let (sop_loss, dl_ds) = match opts.sop {
        Some((s0, alpha)) => {
            let s0 = F::from_f64(s0).unwrap();
            let alpha = F::from_f64(alpha).unwrap();
            (alpha * (s0 - sops).powi(2), -two * alpha * (s0 - sops))
        }
        None => (F::zero(), F::zero()),
    };

    let mut grads: Vec<Vec<F>> = params.iter().map(|p| vec![F::zero(); p.len()]).collect();
    let mut carry: Vec<Vec<F>> = shapes.iter().map(|s| vec![F::zero(); s.output.len()]).collect();
    let mut g_n: Vec<Vec<F>> = carry.clone();
    for t in (0..steps).rev() {
        let o = outputs[t];
        let mut g_out = vec![(o[0] - tv[0]) / t_count, (o[1] - tv[1]) / t_count];
        for l in (0..n_layers).rev() {
            let s = &shapes[l];
            if l + 1 < n_layers && dl_ds != F::zero() {
                for (g, f) in g_out.iter_mut().zip(&topo.fan[l + 1]) {
                    *g += dl_ds * *f;
                }
            }
            let pool = spec.layers[l].kind.pool();
            let gn = &mut g_n[l];
            if pool > 1 {
                ops::sum_pool_backward(&g_out, s.output, pool, gn);
            } else {
                gn.copy_from_slice(&g_out);
            }
            let vpre = &vpres[t][l];
            let cv = &mut carry[l];
            for i in 0..gn.len() {
                let u = vpre[i].max(clamp[l]);
                let sg = surrogate_grad(u, th[l], beta);
                let gu = gn[i] * sg + cv[i] * (F::one() - th[l] * sg);
                let g = if vpre[i] > clamp[l] { gu } else { F::zero() };
                cv[i] = g;
                gn[i] = g;
            }
            let x = &inputs[t][l];
            let ga = &g_n[l];
            match &spec.layers[l].kind {
                LayerKind::Conv(c) => {
                    ops::conv2d_grad_weights(x, s.input, c, ga, s.output, &mut grads[l]);
                }
                LayerKind::Fc(_) => ops::fc_grad_weights(x, ga, &mut grads[l]),
            }
            if l > 0 {
                let mut gi = vec![F::zero(); s.input.len()];
                match &spec.layers[l].kind {
                    LayerKind::Conv(c) => {
                        ops::conv2d_grad_input(ga, s.output, c, &params[l], s.input, &mut gi)
                    }
                    LayerKind::Fc(_) => ops::fc_grad_input(ga, &params[l], &mut gi),
                }
                g_out = gi;
            }
        }
    }
    if !(mse + sop_loss).is_finite() {
        return Err(Error::NonFinite("sample loss".into()));
    }
    Ok(SampleGrad {
        mse,
        sop_loss,
        sops,
        outputs,
        grads,
    })
}

/// Sums `parts` in order into `acc`.
pub fn accumulate<F: Real>(acc: &mut [Vec<F>], part: &[Vec<F>]) {
    for (a, p) in acc.iter_mut().zip(part) {
        for (x, y) in a.iter_mut().zip(p) {
            *x += *y;
        }
    }
}

/// Generic max-weight penalty value.
pub(crate) fn max_abs_sum<F: Real>(params: &[Vec<F>]) -> F {
    params
        .iter()
        .map(|w| w.iter().fold(F::zero(), |m, x| m.max(x.abs())))
        .sum()
}

/// Mean loss and gradient over a batch. Per-sample gradients may be
/// computed in parallel; they are summed in sample order and divided by
/// the batch size, then the max-weight subgradient is added once.
pub fn batch_grad<F: Real>(
    spec: &NetworkSpec,
    params: &[Vec<F>],
    batch: &[(&BinnedSample, Label)],
    opts: &BpttOptions,
) -> Result<BatchGrad<F>> {
    let topo = topology(spec, params)?;
    let parts: Vec<SampleGrad<F>> = batch
        .par_iter()
        .map(|(s, l)| sample_grad_with(spec, &topo, params, s, *l, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut grads: Vec<Vec<F>> = params.iter().map(|p| vec![F::zero(); p.len()]).collect();
    let (mut mse, mut sop, mut sops) = (F::zero(), F::zero(), F::zero());
    for p in &parts {
        accumulate(&mut grads, &p.grads);
        mse += p.mse;
        sop += p.sop_loss;
        sops += p.sops;
    }
    let n = F::from_usize(batch.len().max(1)).unwrap();
    for g in grads.iter_mut().flatten() {
        *g = *g / n;
    }
    let weight_loss = if opts.weight_penalty {
        accumulate(&mut grads, &weight_loss_grad(params));
        max_abs_sum(params)
    } else {
        F::zero()
    };
    let (mse, sop) = (mse / n, sop / n);
    Ok(BatchGrad {
        loss: mse + sop + weight_loss,
        mse,
        sop_loss: sop,
        weight_loss,
        mean_sops: sops / n,
        grads,
    })
}
