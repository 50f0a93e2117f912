//! Time-stepped spiking inference and single-pass ReLU inference.

use crate::error::{Error, Result};
use crate::events::{AggregateFrame, BinnedSample, Label};

use super::layer::{LayerKind, Shape3};
use super::network::{LayerShapes, Mode, NetworkSpec};
use super::neuron::{integrate_fire, IFState};
use super::ops;

/// Result of running one sample through the spiking network.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForwardTrace {
    /// Spike counts of the two output neurons, one entry per time step.
    pub output_spikes: Vec<[u32; 2]>,
    /// Synaptic operations triggered by spikes entering each layer.
    pub sops_per_layer: Vec<u64>,
    pub total_sops: u64,
    /// Synaptic operations per time step.
    pub sops_per_step: Vec<u64>,
    /// Spikes emitted by each layer (before pooling), summed over steps.
    pub layer_spikes: Vec<u64>,
}

impl ForwardTrace {
    pub fn steps(&self) -> usize {
        self.output_spikes.len()
    }

    /// Output spike totals over the window, `[drone, no-drone]`.
    pub fn totals(&self) -> [u64; 2] {
        self.output_spikes.iter().fold([0, 0], |acc, s| {
            [acc[0] + s[0] as u64, acc[1] + s[1] as u64]
        })
    }
}

/// Membrane state of every layer. One per concurrent inference.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub layers: Vec<IFState>,
}

impl NetworkState {
    /// Zero membranes with the default floor of `-threshold`.
    pub fn fresh(spec: &NetworkSpec) -> Result<Self> {
        let shapes = spec.layer_shapes()?;
        Ok(Self {
            layers: spec
                .layers
                .iter()
                .zip(&shapes)
                .map(|(l, s)| IFState::for_threshold(s.output.len(), l.threshold))
                .collect(),
        })
    }
}

/// Decision from output spike totals; an exact tie means no drone.
pub fn classify_counts(totals: [u64; 2]) -> Label {
    if totals[0] > totals[1] {
        Label::Drone
    } else {
        Label::NoDrone
    }
}

pub fn classify_window(trace: &ForwardTrace) -> Label {
    classify_counts(trace.totals())
}

/// Decision from ReLU class scores; ties go to no-drone.
pub fn classify_scores(scores: [f32; 2]) -> Label {
    if scores[0] > scores[1] {
        Label::Drone
    } else {
        Label::NoDrone
    }
}

/// Per-input-element synaptic fan-out of each layer.
fn fanouts(spec: &NetworkSpec, shapes: &[LayerShapes]) -> Result<Vec<Vec<u64>>> {
    spec.layers
        .iter()
        .zip(shapes)
        .map(|(layer, s)| match &layer.kind {
            LayerKind::Conv(c) => {
                let plane = ops::conv_fanout(s.input, c)?;
                Ok((0..s.input.len()).map(|i| plane[i % s.input.plane()]).collect())
            }
            LayerKind::Fc(f) => Ok(vec![f.out_features as u64; s.input.len()]),
        })
        .collect()
}

fn check_spec(spec: &NetworkSpec, mode: Mode) -> Result<Vec<LayerShapes>> {
    if spec.mode != mode {
        return Err(Error::InvalidConfig(format!(
            "network is in {:?} mode, expected {:?}",
            spec.mode, mode
        )));
    }
    spec.check()?;
    for (i, l) in spec.layers.iter().enumerate() {
        if l.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("layer {i} weights")));
        }
    }
    spec.layer_shapes()
}

fn check_geometry(input: Shape3, height: usize, width: usize) -> Result<()> {
    if input.h != height || input.w != width {
        return Err(Error::Shape(format!(
            "sample is {height}x{width}, network expects {}x{}",
            input.h, input.w
        )));
    }
    Ok(())
}

/// Runs a sample from fresh membranes.
pub fn snn_forward(spec: &NetworkSpec, sample: &BinnedSample) -> Result<ForwardTrace> {
    let mut state = NetworkState::fresh(spec)?;
    snn_forward_with_state(spec, sample, &mut state)
}

/// Runs a sample continuing from `state`.
pub fn snn_forward_with_state(
    spec: &NetworkSpec,
    sample: &BinnedSample,
    state: &mut NetworkState,
) -> Result<ForwardTrace> {
    let shapes = check_spec(spec, Mode::Spiking)?;
    check_geometry(spec.input, sample.height(), sample.width())?;
    if state.layers.len() != spec.layers.len()
        || state
            .layers
            .iter()
            .zip(&shapes)
            .any(|(st, s)| st.membrane.len() != s.output.len())
    {
        return Err(Error::Shape("state does not match network".into()));
    }
    let fan = fanouts(spec, &shapes)?;
    let n_layers = spec.layers.len();

    let mut input = vec![0f32; spec.input.len()];
    let mut drive: Vec<Vec<f32>> = shapes.iter().map(|s| vec![0.0; s.output.len()]).collect();
    let mut pooled: Vec<Vec<f32>> = shapes.iter().map(|s| vec![0.0; s.pooled.len()]).collect();

    let mut trace = ForwardTrace {
        sops_per_layer: vec![0; n_layers],
        layer_spikes: vec![0; n_layers],
        ..Default::default()
    };

    for t in 0..sample.steps() {
        input.fill(0.0);
        let mut step_sops = 0u64;
        let mut layer0 = 0u64;
        for &(idx, count) in sample.step_entries(t) {
            input[idx as usize] = count as f32;
            layer0 += count as u64 * fan[0][idx as usize];
        }
        trace.sops_per_layer[0] += layer0;
        step_sops += layer0;

        for l in 0..n_layers {
            let layer = &spec.layers[l];
            let s = shapes[l];
            if l > 0 {
                let prev = &pooled[l - 1];
                let sops: u64 = prev
                    .iter()
                    .zip(&fan[l])
                    .filter(|(v, _)| **v != 0.0)
                    .map(|(v, f)| *v as u64 * f)
                    .sum();
                trace.sops_per_layer[l] += sops;
                step_sops += sops;
            }
            let src: &[f32] = if l == 0 { &input } else { &pooled[l - 1] };
            let d = &mut drive[l];
            d.fill(0.0);
            match &layer.kind {
                LayerKind::Conv(c) => {
                    ops::conv2d_accumulate(src, s.input, c, &layer.weights, d, s.output)
                }
                LayerKind::Fc(_) => ops::fc_accumulate(src, &layer.weights, d),
            }
            let st = &mut state.layers[l];
            let mut fired = 0u64;
            for (v, x) in st.membrane.iter_mut().zip(d.iter_mut()) {
                let n = integrate_fire(v, *x, layer.threshold, st.clamp_min);
                fired += n as u64;
                *x = n;
            }
            trace.layer_spikes[l] += fired;
            let pool = layer.kind.pool();
            let (d_ref, p) = (&drive[l], &mut pooled[l]);
            if pool > 1 {
                ops::sum_pool_into(d_ref, s.output, pool, p);
            } else {
                p.copy_from_slice(d_ref);
            }
        }
        let out = &pooled[n_layers - 1];
        trace.output_spikes.push([out[0] as u32, out[1] as u32]);
        trace.sops_per_step.push(step_sops);
    }
    trace.total_sops = trace.sops_per_layer.iter().sum();
    Ok(trace)
}

/// Single pass with ReLU activations; returns raw `[drone, no-drone]`
/// scores. The last layer has no activation.
pub fn ann_forward(spec: &NetworkSpec, frame: &AggregateFrame) -> Result<[f32; 2]> {
    let shapes = check_spec(spec, Mode::Relu)?;
    check_geometry(spec.input, frame.height(), frame.width())?;
    let mut x: Vec<f32> = frame.counts().iter().map(|&c| c as f32).collect();
    let n_layers = spec.layers.len();
    for (l, (layer, s)) in spec.layers.iter().zip(&shapes).enumerate() {
        let mut y = vec![0f32; s.output.len()];
        match &layer.kind {
            LayerKind::Conv(c) => ops::conv2d_accumulate(&x, s.input, c, &layer.weights, &mut y, s.output),
            LayerKind::Fc(_) => ops::fc_accumulate(&x, &layer.weights, &mut y),
        }
        if l + 1 < n_layers {
            for v in &mut y {
                *v = v.max(0.0);
            }
        }
        let pool = layer.kind.pool();
        x = if pool > 1 {
            ops::sum_pool(&y, s.output, pool)?.0
        } else {
            y
        };
    }
    Ok([x[0], x[1]])
}
