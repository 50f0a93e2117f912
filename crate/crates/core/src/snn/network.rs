use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layer::{ConvSpec, LayerKind, LayerSpec, Shape3};

/// Hardware limits of the target neuromorphic chip.
pub const MAX_LAYERS: usize = 9;
pub const MAX_NEURONS: usize = 328_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Integrate-and-fire neurons over binned time steps.
    Spiking,
    /// ReLU activations on a single aggregated frame.
    Relu,
}

impl Mode {
    pub fn input_channels(self) -> usize {
        match self {
            Mode::Spiking => 2,
            Mode::Relu => 1,
        }
    }
}

/// A constraint a [`NetworkSpec`] fails.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    LayerCount { count: usize, max: usize },
    NeuronBudget { count: usize, max: usize },
    Shape { layer: usize, detail: String },
    WeightCount { layer: usize, expected: usize, actual: usize },
    Threshold { layer: usize, value: f32 },
    ConvAfterFc { layer: usize },
    InputChannels { expected: usize, actual: usize },
    OutputSize { features: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::LayerCount { count, max } => write!(f, "layer count {count} > {max}"),
            Violation::NeuronBudget { count, max } => {
                write!(f, "neuron budget {count} > {max}")
            }
            Violation::Shape { layer, detail } => write!(f, "layer {layer}: {detail}"),
            Violation::WeightCount {
                layer,
                expected,
                actual,
            } => write!(f, "layer {layer}: {actual} weights, expected {expected}"),
            Violation::Threshold { layer, value } => {
                write!(f, "layer {layer}: threshold {value} must be positive")
            }
            Violation::ConvAfterFc { layer } => {
                write!(f, "layer {layer}: convolution after a fully connected layer")
            }
            Violation::InputChannels { expected, actual } => {
                write!(f, "input has {actual} channels, mode expects {expected}")
            }
            Violation::OutputSize { features } => {
                write!(f, "output layer has {features} neurons, expected 2")
            }
        }
    }
}

/// Shapes around one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShapes {
    pub input: Shape3,
    /// Neuron grid before pooling.
    pub output: Shape3,
    /// What the next layer sees.
    pub pooled: Shape3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input: Shape3,
    pub layers: Vec<LayerSpec>,
    pub mode: Mode,
}

impl NetworkSpec {
    /// Four 3x3 convolutions (sum-pooled by 2 after the first three) and
    /// four fully connected layers ending in two output neurons.
    /// `height` and `width` must be multiples of 8.
    pub fn default_architecture(mode: Mode, height: usize, width: usize) -> Self {
        let c0 = mode.input_channels();
        let flat = 8 * (height / 8) * (width / 8);
        let layers = vec![
            LayerSpec::conv(ConvSpec::new(c0, 4, 3, 2)),
            LayerSpec::conv(ConvSpec::new(4, 8, 3, 2)),
            LayerSpec::conv(ConvSpec::new(8, 8, 3, 2)),
            LayerSpec::conv(ConvSpec::new(8, 8, 3, 1)),
            LayerSpec::fc(flat, 256),
            LayerSpec::fc(256, 64),
            LayerSpec::fc(64, 16),
            LayerSpec::fc(16, 2),
        ];
        Self {
            input: Shape3::new(c0, height, width),
            layers,
            mode,
        }
    }

    /// Same topology, other mode: only the first layer's input channels change.
    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut out = self.clone();
        out.mode = mode;
        out.input.c = mode.input_channels();
        if let Some(first) = out.layers.first_mut() {
            if let LayerKind::Conv(ref mut c) = first.kind {
                c.in_channels = mode.input_channels();
                first.weights = vec![0.0; c.weight_count()];
            }
        }
        out
    }

    pub fn layer_shapes(&self) -> Result<Vec<LayerShapes>> {
        let mut shape = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let (output, pooled) = match &layer.kind {
                LayerKind::Conv(c) => {
                    let o = c
                        .output_shape(shape)
                        .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
                    let p = c
                        .pooled_shape(o)
                        .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
                    (o, p)
                }
                LayerKind::Fc(f) => {
                    if f.in_features != shape.len() {
                        return Err(Error::Shape(format!(
                            "layer {i}: fc expects {} inputs, previous layer gives {shape} = {}",
                            f.in_features,
                            shape.len()
                        )));
                    }
                    let o = Shape3::flat(f.out_features);
                    (o, o)
                }
            };
            out.push(LayerShapes {
                input: shape,
                output,
                pooled,
            });
            shape = pooled;
        }
        Ok(out)
    }

    /// Sum of pre-pool neuron counts over all layers.
    pub fn neuron_count(&self) -> Result<usize> {
        Ok(self.layer_shapes()?.iter().map(|s| s.output.len()).sum())
    }

    /// Checks every constraint and lists each violation.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        if self.layers.len() > MAX_LAYERS {
            v.push(Violation::LayerCount {
                count: self.layers.len(),
                max: MAX_LAYERS,
            });
        }
        if self.input.c != self.mode.input_channels() {
            v.push(Violation::InputChannels {
                expected: self.mode.input_channels(),
                actual: self.input.c,
            });
        }
        let mut seen_fc = false;
        for (i, layer) in self.layers.iter().enumerate() {
            match layer.kind {
                LayerKind::Fc(_) => seen_fc = true,
                LayerKind::Conv(_) if seen_fc => v.push(Violation::ConvAfterFc { layer: i }),
                LayerKind::Conv(_) => {}
            }
            let expected = layer.kind.weight_count();
            if layer.weights.len() != expected {
                v.push(Violation::WeightCount {
                    layer: i,
                    expected,
                    actual: layer.weights.len(),
                });
            }
            if !(layer.threshold > 0.0 && layer.threshold.is_finite()) {
                v.push(Violation::Threshold {
                    layer: i,
                    value: layer.threshold,
                });
            }
        }
        match self.layer_shapes() {
            Ok(shapes) => {
                let neurons: usize = shapes.iter().map(|s| s.output.len()).sum();
                if neurons > MAX_NEURONS {
                    v.push(Violation::NeuronBudget {
                        count: neurons,
                        max: MAX_NEURONS,
                    });
                }
                if let Some(last) = shapes.last() {
                    if last.pooled.len() != 2 {
                        v.push(Violation::OutputSize {
                            features: last.pooled.len(),
                        });
                    }
                }
            }
            Err(e) => v.push(Violation::Shape {
                layer: self.layers.len(),
                detail: e.to_string(),
            }),
        }
        if self.layers.is_empty() {
            v.push(Violation::OutputSize { features: 0 });
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// [`validate`](Self::validate) as an error.
    pub fn check(&self) -> Result<()> {
        self.validate().map_err(|v| {
            Error::InvalidConfig(
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })
    }

    /// Fan-in scaled normal weights, `std = gain * sqrt(2 / fan_in)`.
    pub fn kaiming_init(mut self, seed: u64, gain: f32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut self.layers {
            let std = gain * (2.0 / layer.fan_in() as f32).sqrt();
            let dist = Normal::new(0.0, std).expect("finite std");
            layer.weights = (0..layer.kind.weight_count())
                .map(|_| dist.sample(&mut rng))
                .collect();
        }
        self
    }

    /// Per-layer weight vectors.
    pub fn params(&self) -> Vec<Vec<f32>> {
        self.layers.iter().map(|l| l.weights.clone()).collect()
    }

    pub fn set_params(&mut self, params: &[Vec<f32>]) {
        for (layer, p) in self.layers.iter_mut().zip(params) {
            layer.weights.clone_from(p);
        }
    }

    pub fn thresholds(&self) -> Vec<f32> {
        self.layers.iter().map(|l| l.threshold).collect()
    }
}

/// Free-function form of [`NetworkSpec::validate`].
pub fn validate_network(spec: &NetworkSpec) -> std::result::Result<(), Vec<Violation>> {
    spec.validate()
}
