//! Surrogate-gradient training of the spiking network and plain
//! backpropagation for the ReLU network.

mod adam;
mod ann;
mod bptt;
mod loss;
mod split;
mod surrogate;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use ann::{ann_batch_grad, frame_grad, AnnGrad};
pub use bptt::{accumulate, batch_grad, sample_grad, BatchGrad, BpttOptions, SampleGrad};
pub use loss::{cross_entropy, mse_step_loss, sop_loss, total_loss, weight_loss, weight_loss_grad};
pub use split::{split_dataset, Split, MIN_SPLIT_SAMPLES, VALIDATION_FRACTION};
pub use surrogate::{soft_spike, surrogate_grad};
pub use trainer::{
    initial_network, train_ann, train_snn, write_history_csv, EpochRecord, Regularization,
    TargetSpikes, TrainConfig, TrainOutcome,
};
