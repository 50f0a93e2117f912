//! Events, event streams and their tensor views.
//!
//! An [`EventStream`] is the universal input representation: a time-sorted
//! list of per-pixel polarity changes on a fixed sensor geometry. The
//! [`binning`] module turns windows of a stream into spike-count tensors,
//! [`labeling`] assigns drone/no-drone labels to windows and [`io`] reads and
//! writes the CSV on-disk format.

pub mod binning;
pub mod io;
pub mod labeling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binning::{aggregate_window, bin_events, AggregateFrame, BinnedSample};
pub use io::{read_events, write_events, StreamMeta};
pub use labeling::{label_windows, WindowDescriptor};

/// Default sensor side length in pixels.
pub const SENSOR_SIZE: u16 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    /// Brightening, `p = +1`.
    Positive,
    /// Darkening, `p = -1`.
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    /// Tensor channel: 0 for positive, 1 for negative events.
    pub fn channel(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }
}

/// A single pixel event `(x, y, t, p)`; `t` in microseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u16, y: u16, t: u64, p: Polarity) -> Self {
        Self { x, y, t, p }
    }
}

/// Binary class of a window. Output neuron 0 is drone, neuron 1 no-drone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "drone")]
    Drone,
    #[serde(rename = "no-drone")]
    NoDrone,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Drone => 0,
            Label::NoDrone => 1,
        }
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Label::Drone
        } else {
            Label::NoDrone
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Drone => "drone",
            Label::NoDrone => "no-drone",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Time-sorted events on a `width x height` sensor spanning `[0, duration_us]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStream {
    width: u16,
    height: u16,
    duration_us: u64,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, checking ordering, coordinates and the time span.
    pub fn new(width: u16, height: u16, duration_us: u64, events: Vec<Event>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "sensor geometry {width}x{height} must be non-empty"
            )));
        }
        let mut last = 0u64;
        for (i, e) in events.iter().enumerate() {
            if e.x >= width || e.y >= height {
                return Err(Error::InvalidConfig(format!(
                    "event {i} at ({}, {}) outside {width}x{height} sensor",
                    e.x, e.y
                )));
            }
            if e.t < last {
                return Err(Error::InvalidConfig(format!(
                    "event {i} at t={} us precedes t={last} us",
                    e.t
                )));
            }
            if e.t > duration_us {
                return Err(Error::InvalidConfig(format!(
                    "event {i} at t={} us beyond duration {duration_us} us",
                    e.t
                )));
            }
            last = e.t;
        }
        Ok(Self {
            width,
            height,
            duration_us,
            events,
        })
    }

    pub fn empty(width: u16, height: u16, duration_us: u64) -> Self {
        Self {
            width,
            height,
            duration_us,
            events: Vec::new(),
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Events with `start_us <= t < end_us`.
    pub fn slice(&self, start_us: u64, end_us: u64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < start_us);
        let hi = self.events.partition_point(|e| e.t < end_us);
        &self.events[lo..hi.max(lo)]
    }

    pub(crate) fn check_window(&self, start_us: u64, len_us: u64) -> Result<()> {
        let end_us = start_us.saturating_add(len_us);
        if end_us > self.duration_us {
            return Err(Error::WindowOutOfRange {
                start_us,
                end_us,
                duration_us: self.duration_us,
            });
        }
        Ok(())
    }
}
