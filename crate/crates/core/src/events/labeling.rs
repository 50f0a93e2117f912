use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{EventStream, Label};

/// A window `[start_us, start_us + len_us)` and its label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowDescriptor {
    pub start_us: u64,
    pub len_us: u64,
    pub label: Label,
}

impl WindowDescriptor {
    pub fn end_us(&self) -> u64 {
        self.start_us + self.len_us
    }
}

/// Tiles the stream with windows of `window_len_us` every `stride_us` and
/// labels a window drone iff it overlaps some annotated interval
/// `[start, end)` by at least one microsecond.
pub fn label_windows(
    stream: &EventStream,
    annotations: &[(u64, u64)],
    window_len_us: u64,
    stride_us: u64,
) -> Result<Vec<WindowDescriptor>> {
    if window_len_us == 0 || stride_us == 0 {
        return Err(Error::InvalidConfig(
            "window length and stride must be positive".into(),
        ));
    }
    for &(a, b) in annotations {
        if b < a {
            return Err(Error::InvalidConfig(format!(
                "inverted annotation interval [{a}, {b}]"
            )));
        }
        if b > stream.duration_us() {
            return Err(Error::InvalidConfig(format!(
                "annotation [{a}, {b}] beyond stream duration {}",
                stream.duration_us()
            )));
        }
    }
    let mut out = Vec::new();
    let mut start = 0u64;
    while start + window_len_us <= stream.duration_us() {
        let end = start + window_len_us;
        let drone = annotations
            .iter()
            .any(|&(a, b)| b.min(end).saturating_sub(a.max(start)) >= 1);
        out.push(WindowDescriptor {
            start_us: start,
            len_us: window_len_us,
            label: if drone { Label::Drone } else { Label::NoDrone },
        });
        start += stride_us;
    }
    Ok(out)
}
