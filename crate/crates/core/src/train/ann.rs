//! Backpropagation for the ReLU network with softmax cross-entropy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{AggregateFrame, Label};
use crate::snn::ops;
use crate::snn::{LayerKind, Mode, NetworkSpec, Real};

use super::bptt::accumulate;

#[derive(Clone, Debug, PartialEq)]
pub struct AnnGrad<F> {
    pub loss: F,
    pub scores: [F; 2],
    pub grads: Vec<Vec<F>>,
}

fn check<F: Real>(spec: &NetworkSpec, params: &[Vec<F>]) -> Result<()> {
    if spec.mode != Mode::Relu {
        return Err(Error::InvalidConfig("ANN training needs a relu network".into()));
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
    Ok(())
}

/// Loss and gradient of one frame.
pub fn frame_grad<F: Real>(
    spec: &NetworkSpec,
    params: &[Vec<F>],
    frame: &AggregateFrame,
    label: Label,
) -> Result<AnnGrad<F>> {
    check(spec, params)?;
    if frame.height() != spec.input.h || frame.width() != spec.input.w {
        return Err(Error::Shape(format!(
            "frame is {}x{}, network expects {}x{}",
            frame.height(),
            frame.width(),
            spec.input.h,
            spec.input.w
        )));
    }
    let shapes = spec.layer_shapes()?;
    let n_layers = spec.layers.len();
    let mut x: Vec<F> = frame.counts().iter().map(|&c| F::from_u32(c).unwrap()).collect();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers);
    for (l, (layer, s)) in spec.layers.iter().zip(&shapes).enumerate() {
        let mut y = vec![F::zero(); s.output.len()];
        match &layer.kind {
            LayerKind::Conv(c) => ops::conv2d_accumulate(&x, s.input, c, &params[l], &mut y, s.output),
            LayerKind::Fc(_) => ops::fc_accumulate(&x, &params[l], &mut y),
        }
        let act: Vec<F> = if l + 1 < n_layers {
            y.iter().map(|v| v.max(F::zero())).collect()
        } else {
            y.clone()
        };
        let pool = layer.kind.pool();
        let out = if pool > 1 {
            let mut p = vec![F::zero(); s.pooled.len()];
            ops::sum_pool_into(&act, s.output, pool, &mut p);
            p
        } else {
            act
        };
        inputs.push(std::mem::replace(&mut x, out));
        pre.push(y);
    }
    let scores = [x[0], x[1]];
    let m = scores[0].max(scores[1]);
    let e = [(scores[0] - m).exp(), (scores[1] - m).exp()];
    let z = e[0] + e[1];
    let loss = m + z.ln() - scores[label.index()];
    let mut g = vec![e[0] / z, e[1] / z];
    g[label.index()] = g[label.index()] - F::one();

    let mut grads: Vec<Vec<F>> = params.iter().map(|p| vec![F::zero(); p.len()]).collect();
    for l in (0..n_layers).rev() {
        let s = &shapes[l];
        let layer = &spec.layers[l];
        let pool = layer.kind.pool();
        let mut gy = vec![F::zero(); s.output.len()];
        if pool > 1 {
            ops::sum_pool_backward(&g, s.output, pool, &mut gy);
        } else {
            gy.copy_from_slice(&g);
        }
        if l + 1 < n_layers {
            for (gv, y) in gy.iter_mut().zip(&pre[l]) {
                if *y <= F::zero() {
                    *gv = F::zero();
                }
            }
        }
        match &layer.kind {
            LayerKind::Conv(c) => {
                ops::conv2d_grad_weights(&inputs[l], s.input, c, &gy, s.output, &mut grads[l])
            }
            LayerKind::Fc(_) => ops::fc_grad_weights(&inputs[l], &gy, &mut grads[l]),
        }
        if l > 0 {
            let mut gi = vec![F::zero(); s.input.len()];
            match &layer.kind {
                LayerKind::Conv(c) => {
                    ops::conv2d_grad_input(&gy, s.output, c, &params[l], s.input, &mut gi)
                }
                LayerKind::Fc(_) => ops::fc_grad_input(&gy, &params[l], &mut gi),
            }
            g = gi;
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy".into()));
    }
    Ok(AnnGrad {
        loss,
        scores,
        grads,
    })
}

/// Mean cross-entropy and gradient over a batch, summed in sample order.
pub fn ann_batch_grad<F: Real>(
    spec: &NetworkSpec,
    params: &[Vec<F>],
    batch: &[(&AggregateFrame, Label)],
) -> Result<(F, Vec<Vec<F>>)> {
    let parts: Vec<AnnGrad<F>> = batch
        .par_iter()
        .map(|(f, l)| frame_grad(spec, params, f, *l))
        .collect::<Result<Vec<_>>>()?;
    let mut grads: Vec<Vec<F>> = params.iter().map(|p| vec![F::zero(); p.len()]).collect();
    let mut loss = F::zero();
    for p in &parts {
        accumulate(&mut grads, &p.grads);
        loss += p.loss;
    }
    let n = F::from_usize(batch.len().max(1)).unwrap();
    for g in grads.iter_mut().flatten() {
        *g = *g / n;
    }
    Ok((loss / n, grads))
}
