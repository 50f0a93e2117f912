//! Convolutional spiking network engine: layers, integrate-and-fire
//! dynamics, synaptic-operation and FLOP accounting, model files.

mod flops;
mod format;
mod forward;
mod layer;
mod network;
mod neuron;
pub(crate) mod ops;

pub use flops::count_flops;
pub use format::{load_model, save_model, ModelFile};
pub use forward::{
    ann_forward, classify_counts, classify_scores, classify_window, snn_forward,
    snn_forward_with_state, ForwardTrace, NetworkState,
};
pub use layer::{ConvSpec, FcSpec, LayerKind, LayerSpec, Shape3};
pub use network::{validate_network, LayerShapes, Mode, NetworkSpec, Violation, MAX_LAYERS, MAX_NEURONS};
pub use neuron::{if_step, integrate_fire, IFState};
pub use ops::{conv2d, conv_fanout, fully_connected, sum_pool};

/// Scalar type the kernels are generic over: `f32` for inference, `f64`
/// for gradient checks.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + Default
    + std::fmt::Debug
    + std::iter::Sum
    + std::ops::AddAssign
    + Send
    + Sync
    + 'static
{
    fn of_f32(v: f32) -> Self;
    fn as_f32(self) -> f32;
}

impl Real for f32 {
    fn of_f32(v: f32) -> Self {
        v
    }
    fn as_f32(self) -> f32 {
        self
    }
}

impl Real for f64 {
    fn of_f32(v: f32) -> Self {
        v as f64
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
}
