//! Frame-to-event conversion with multi-event threshold crossings.
//!
//! Each pixel tracks a reference log intensity `L_ref`, initialised from the
//! first frame with `L = ln(I + eps)`. On every new frame the change
//! `dL = L - L_ref` yields `floor(|dL| / C)` events of polarity `sign(dL)`,
//! and the reference moves by exactly that many thresholds so sub-threshold
//! residue carries over to the next frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};

use super::FrameSequence;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConverterParams {
    /// Contrast threshold `C` in log-intensity units.
    pub threshold: f64,
    /// Floor added before the log.
    pub log_eps: f64,
    /// Per-pixel dead time; events inside it are dropped (the reference
    /// still advances).
    pub refractory_us: u64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            log_eps: 1e-3,
            refractory_us: 0,
        }
    }
}

impl ConverterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "contrast threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.log_eps > 0.0 && self.log_eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "log floor must be positive, got {}",
                self.log_eps
            )));
        }
        Ok(())
    }
}

/// Incremental converter: feed frames one at a time, collect the events of
/// each inter-frame interval.
#[derive(Clone, Debug)]
pub struct EventConverter {
    width: usize,
    height: usize,
    frame_us: f64,
    params: ConverterParams,
    reference: Vec<f64>,
    last_event: Vec<Option<u64>>,
    frames_seen: usize,
}

impl EventConverter {
    pub fn new(
        width: usize,
        height: usize,
        fps: f64,
        params: ConverterParams,
        first_frame: &[f32],
    ) -> Result<Self> {
        params.validate()?;
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        if first_frame.len() != width * height {
            return Err(Error::Shape(format!(
                "frame has {} pixels, expected {}",
                first_frame.len(),
                width * height
            )));
        }
        let reference = first_frame
            .iter()
            .map(|&i| log_intensity(i, params.log_eps))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width,
            height,
            frame_us: 1e6 / fps,
            params,
            reference,
            last_event: vec![None; width * height],
            frames_seen: 1,
        })
    }

    /// Start time of frame `k` in microseconds.
    pub fn frame_time_us(&self, k: usize) -> f64 {
        k as f64 * self.frame_us
    }

    /// Processes the next frame and appends the events of the interval since
    /// the previous frame to `out`, sorted by `(t, y, x)`.
    pub fn push_frame(&mut self, frame: &[f32], out: &mut Vec<Event>) -> Result<()> {
        if frame.len() != self.width * self.height {
            return Err(Error::Shape(format!(
                "frame has {} pixels, expected {}",
                frame.len(),
                self.width * self.height
            )));
        }
        let c = self.params.threshold;
        let t_prev = self.frame_time_us(self.frames_seen - 1);
        let start = out.len();
        for (idx, &intensity) in frame.iter().enumerate() {
            let l = log_intensity(intensity, self.params.log_eps)?;
            let delta = l - self.reference[idx];
            let n = (delta.abs() / c).floor();
            if n < 1.0 {
                continue;
            }
            let p = if delta > 0.0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            self.reference[idx] += p.sign() as f64 * n * c;
            let n = n as u64;
            let (x, y) = ((idx % self.width) as u16, (idx / self.width) as u16);
            for j in 1..=n {
                let t = (t_prev + j as f64 * self.frame_us / (n + 1) as f64).floor() as u64;
                if self.params.refractory_us > 0 {
                    if let Some(last) = self.last_event[idx] {
                        if t < last + self.params.refractory_us {
                            continue;
                        }
                    }
                }
                self.last_event[idx] = Some(t);
                out.push(Event::new(x, y, t, p));
            }
        }
        out[start..].sort_by_key(|e| (e.t, e.y, e.x));
        self.frames_seen += 1;
        Ok(())
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Current reference log intensities.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }
}

fn log_intensity(i: f32, eps: f64) -> Result<f64> {
    if !i.is_finite() {
        return Err(Error::NonFinite(format!("frame intensity {i}")));
    }
    Ok((i as f64 + eps).ln())
}

/// Converts a whole frame sequence. The stream spans `(n - 1) / fps` seconds.
pub fn frames_to_events(seq: &FrameSequence, params: &ConverterParams) -> Result<EventStream> {
    let frames = seq.frames();
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty frame sequence".into()))?;
    let mut conv = EventConverter::new(seq.width(), seq.height(), seq.fps(), *params, first)?;
    let mut events = Vec::new();
    for frame in &frames[1..] {
        conv.push_frame(frame, &mut events)?;
    }
    let duration_us = conv.frame_time_us(frames.len() - 1).ceil() as u64;
    EventStream::new(seq.width() as u16, seq.height() as u16, duration_us, events)
}
