//! Synthetic event data: procedural scenes, frame-to-event conversion and
//! labelled dataset generation.

pub mod converter;
pub mod dataset;
pub mod frames;
pub mod recipe;
pub mod scene;

pub use converter::{frames_to_events, ConverterParams, EventConverter};
pub use dataset::{generate_dataset, simulate_scene, Dataset, DatasetOptions, Manifest, SampleRecord, SceneEvents};
pub use frames::FrameSequence;
pub use recipe::{transit_scene, DeskRecipe};
pub use scene::{render_scene, Distractor, DroneConfig, Edge, SceneConfig, SceneRenderer};

use crate::error::{Error, Result};

/// Lowest video frame rate at which a propeller tip of diameter `d_prop`
/// pixels spinning at `f_prop` Hz moves at most one pixel per frame:
/// `pi * d_prop * f_prop`.
pub fn min_frame_rate(d_prop: f64, f_prop: f64) -> Result<f64> {
    if d_prop < 0.0 || f_prop < 0.0 || !d_prop.is_finite() || !f_prop.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "propeller diameter {d_prop} and frequency {f_prop} must be non-negative"
        )));
    }
    Ok(std::f64::consts::PI * d_prop * f_prop)
}

/// Image-plane speed of the propeller tip in pixels per frame.
pub fn tip_displacement(d_prop: f64, f_prop: f64, fps: f64) -> f64 {
    std::f64::consts::PI * d_prop * f_prop / fps
}
