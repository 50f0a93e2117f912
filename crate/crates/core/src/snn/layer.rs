use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor shape `(channels, height, width)`; fully connected activations use
/// `(features, 1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape3 {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape3 {
    pub const fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub const fn flat(features: usize) -> Self {
        Self { c: features, h: 1, w: 1 }
    }

    pub const fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl std::fmt::Display for Shape3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `[kh, kw]`
    pub kernel: [usize; 2],
    pub stride: usize,
    pub padding: usize,
    /// Sum-pool factor applied after the activation; 1 means none.
    pub pool: usize,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, pool: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel: [kernel, kernel],
            stride: 1,
            padding: kernel / 2,
            pool,
        }
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel[0] * self.kernel[1]
    }

    /// Pre-pool output shape for an input of `input` shape.
    pub fn output_shape(&self, input: Shape3) -> Result<Shape3> {
        if input.c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv expects {} input channels, got {}",
                self.in_channels, input.c
            )));
        }
        if self.stride == 0 {
            return Err(Error::Shape("conv stride must be positive".into()));
        }
        let [kh, kw] = self.kernel;
        if kh == 0 || kw == 0 || input.h + 2 * self.padding < kh || input.w + 2 * self.padding < kw {
            return Err(Error::Shape(format!(
                "kernel {kh}x{kw} does not fit input {input} with padding {}",
                self.padding
            )));
        }
        Ok(Shape3::new(
            self.out_channels,
            (input.h + 2 * self.padding - kh) / self.stride + 1,
            (input.w + 2 * self.padding - kw) / self.stride + 1,
        ))
    }

    pub fn pooled_shape(&self, output: Shape3) -> Result<Shape3> {
        if self.pool == 0 || output.h % self.pool != 0 || output.w % self.pool != 0 {
            return Err(Error::Shape(format!(
                "sum-pool factor {} does not divide {}x{}",
                self.pool, output.h, output.w
            )));
        }
        Ok(Shape3::new(output.c, output.h / self.pool, output.w / self.pool))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcSpec {
    pub in_features: usize,
    pub out_features: usize,
}

impl FcSpec {
    pub fn weight_count(&self) -> usize {
        self.in_features * self.out_features
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Conv(ConvSpec),
    Fc(FcSpec),
}

impl LayerKind {
    pub fn weight_count(&self) -> usize {
        match self {
            LayerKind::Conv(c) => c.weight_count(),
            LayerKind::Fc(f) => f.weight_count(),
        }
    }

    pub fn pool(&self) -> usize {
        match self {
            LayerKind::Conv(c) => c.pool,
            LayerKind::Fc(_) => 1,
        }
    }
}

/// One weight layer. There is no bias: every layer computes `W x` only.
///
/// Conv weights are laid out `[out][in][kh][kw]`, fully connected weights
/// `[out][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub weights: Vec<f32>,
    /// Firing threshold for spiking mode.
    pub threshold: f32,
}

impl LayerSpec {
    pub fn conv(spec: ConvSpec) -> Self {
        Self {
            weights: vec![0.0; spec.weight_count()],
            kind: LayerKind::Conv(spec),
            threshold: 1.0,
        }
    }

    pub fn fc(in_features: usize, out_features: usize) -> Self {
        let spec = FcSpec {
            in_features,
            out_features,
        };
        Self {
            weights: vec![0.0; spec.weight_count()],
            kind: LayerKind::Fc(spec),
            threshold: 1.0,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f32>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_threshold(mut self, threshold: f32) -> Self {
        self.threshold = threshold;
        self
    }

    /// Input elements feeding one output neuron.
    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Conv(c) => c.in_channels * c.kernel[0] * c.kernel[1],
            LayerKind::Fc(f) => f.in_features,
        }
    }
}
