//! Integrate-and-fire neurons with multi-spike output.

use crate::error::{Error, Result};

use super::Real;

/// One integrate-and-fire update: integrate, clamp from below, emit
/// `floor(v / theta)` spikes when `v >= theta` and subtract them.
/// Returns the spike count; afterwards `clamp_min <= v < theta`.
#[inline]
pub fn integrate_fire<F: Real>(v: &mut F, drive: F, theta: F, clamp_min: F) -> F {
    let u = (*v + drive).max(clamp_min);
    let n = if u >= theta { (u / theta).floor() } else { F::zero() };
    // Rounding in u / theta can put the quotient one off either way.
    let mut rest = u - n * theta;
    let mut n = n;
    if rest < F::zero() && n > F::zero() {
        n = n - F::one();
        rest = u - n * theta;
    } else if rest >= theta {
        n = n + F::one();
        rest = u - n * theta;
    }
    *v = rest;
    n
}

/// Membrane potentials of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct IFState {
    pub membrane: Vec<f32>,
    pub clamp_min: f32,
}

impl IFState {
    pub fn new(neurons: usize, clamp_min: f32) -> Self {
        Self {
            membrane: vec![0.0; neurons],
            clamp_min,
        }
    }

    /// Fresh state with the default floor `-theta`.
    pub fn for_threshold(neurons: usize, theta: f32) -> Self {
        Self::new(neurons, -theta)
    }

    /// Applies `drive` to every neuron and writes spike counts into `spikes`.
    pub fn step(&mut self, drive: &[f32], theta: f32, spikes: &mut [u32]) -> Result<()> {
        if_step(&mut self.membrane, drive, theta, self.clamp_min, spikes)
    }
}

/// Slice form of [`integrate_fire`].
pub fn if_step(
    membrane: &mut [f32],
    drive: &[f32],
    theta: f32,
    clamp_min: f32,
    spikes: &mut [u32],
) -> Result<()> {
    if !(theta > 0.0) {
        return Err(Error::InvalidConfig(format!("threshold {theta} must be positive")));
    }
    if membrane.len() != drive.len() || spikes.len() != drive.len() {
        return Err(Error::Shape(format!(
            "membrane {}, drive {}, spikes {}",
            membrane.len(),
            drive.len(),
            spikes.len()
        )));
    }
    if let Some(d) = drive.iter().find(|d| !d.is_finite()) {
        return Err(Error::NonFinite(format!("drive {d}")));
    }
    for ((v, &d), s) in membrane.iter_mut().zip(drive).zip(spikes.iter_mut()) {
        *s = integrate_fire(v, d, theta, clamp_min) as u32;
    }
    Ok(())
}
