use crate::error::{Error, Result};

use super::{EventStream, Label};

/// Spike-count tensor indexed `[step][channel][y][x]` with two polarity
/// channels, stored sparsely per time step.
///
/// Within a step the non-zero entries are kept sorted by their flat
/// channel-major index `c * H * W + y * W + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinnedSample {
    steps: usize,
    height: usize,
    width: usize,
    step_us: u64,
    offsets: Vec<usize>,
    entries: Vec<(u32, u32)>,
    label: Option<Label>,
}

impl BinnedSample {
    pub const CHANNELS: usize = 2;

    /// Builds a sample from per-step `(flat_index, count)` lists. Zero counts
    /// are dropped and duplicate indices within a step are merged.
    pub fn from_step_entries(
        height: usize,
        width: usize,
        step_us: u64,
        steps: Vec<Vec<(u32, u32)>>,
    ) -> Result<Self> {
        let plane = Self::CHANNELS * height * width;
        let mut offsets = Vec::with_capacity(steps.len() + 1);
        let mut entries: Vec<(u32, u32)> = Vec::new();
        offsets.push(0);
        for mut step in steps.into_iter() {
            step.sort_unstable_by_key(|e| e.0);
            let start = entries.len();
            for (idx, count) in step {
                if idx as usize >= plane {
                    return Err(Error::Shape(format!(
                        "entry index {idx} outside a {plane}-element step"
                    )));
                }
                if count == 0 {
                    continue;
                }
                if entries.len() > start && entries[entries.len() - 1].0 == idx {
                    let last = entries.len() - 1;
                    entries[last].1 += count;
                } else {
                    entries.push((idx, count));
                }
            }
            offsets.push(entries.len());
        }
        Ok(Self {
            steps: offsets.len() - 1,
            height,
            width,
            step_us,
            offsets,
            entries,
            label: None,
        })
    }

    /// All-zero sample.
    pub fn zeros(steps: usize, height: usize, width: usize, step_us: u64) -> Self {
        Self {
            steps,
            height,
            width,
            step_us,
            offsets: vec![0; steps + 1],
            entries: Vec::new(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn set_label(&mut self, label: Option<Label>) {
        self.label = label;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn step_us(&self) -> u64 {
        self.step_us
    }

    /// Elements in one step: `2 * H * W`.
    pub fn step_len(&self) -> usize {
        Self::CHANNELS * self.height * self.width
    }

    /// Non-zero `(flat_index, count)` entries of one step.
    pub fn step_entries(&self, step: usize) -> &[(u32, u32)] {
        &self.entries[self.offsets[step]..self.offsets[step + 1]]
    }

    pub fn count(&self, step: usize, channel: usize, y: usize, x: usize) -> u32 {
        let idx = (channel * self.height * self.width + y * self.width + x) as u32;
        let entries = self.step_entries(step);
        match entries.binary_search_by_key(&idx, |e| e.0) {
            Ok(i) => entries[i].1,
            Err(_) => 0,
        }
    }

    /// Sum over the whole tensor.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1 as u64).sum()
    }

    /// Dense copy, laid out `[step][channel][y][x]`.
    pub fn to_dense(&self) -> Vec<u32> {
        let plane = self.step_len();
        let mut out = vec![0u32; self.steps * plane];
        for t in 0..self.steps {
            for &(idx, c) in self.step_entries(t) {
                out[t * plane + idx as usize] = c;
            }
        }
        out
    }

    /// Sum over steps and channels, i.e. the single-channel aggregate image.
    pub fn aggregate(&self) -> AggregateFrame {
        let hw = self.height * self.width;
        let mut counts = vec![0u32; hw];
        for &(idx, c) in &self.entries {
            counts[idx as usize % hw] += c;
        }
        AggregateFrame {
            height: self.height,
            width: self.width,
            counts,
            label: self.label,
        }
    }
}

/// Single-channel event-count image, indexed `[1][y][x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateFrame {
    height: usize,
    width: usize,
    counts: Vec<u32>,
    label: Option<Label>,
}

impl AggregateFrame {
    pub fn new(height: usize, width: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != height * width {
            return Err(Error::Shape(format!(
                "{} counts for a {height}x{width} frame",
                counts.len()
            )));
        }
        Ok(Self {
            height,
            width,
            counts,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.counts[y * self.width + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Bins `[window_start_us, window_start_us + window_len_us)` into
/// `window_len_us / step_us` steps. An event at time `t` goes to step
/// `(t - window_start_us) / step_us`, channel 0 for `p = +1` and 1 for `p = -1`.
pub fn bin_events(
    stream: &EventStream,
    window_start_us: u64,
    window_len_us: u64,
    step_us: u64,
) -> Result<BinnedSample> {
    if step_us == 0 || window_len_us % step_us != 0 {
        return Err(Error::NonDivisibleStep {
            window_len_us,
            step_us,
        });
    }
    stream.check_window(window_start_us, window_len_us)?;
    let steps = (window_len_us / step_us) as usize;
    let (h, w) = (stream.height() as usize, stream.width() as usize);
    let hw = h * w;
    let mut per_step: Vec<Vec<(u32, u32)>> = vec![Vec::new(); steps];
    for e in stream.slice(window_start_us, window_start_us + window_len_us) {
        let step = ((e.t - window_start_us) / step_us) as usize;
        let idx = e.p.channel() * hw + e.y as usize * w + e.x as usize;
        per_step[step].push((idx as u32, 1));
    }
    BinnedSample::from_step_entries(h, w, step_us, per_step)
}

/// Polarity-blind event counts per pixel over the window.
pub fn aggregate_window(
    stream: &EventStream,
    window_start_us: u64,
    window_len_us: u64,
) -> Result<AggregateFrame> {
    stream.check_window(window_start_us, window_len_us)?;
    let (h, w) = (stream.height() as usize, stream.width() as usize);
    let mut counts = vec![0u32; h * w];
    for e in stream.slice(window_start_us, window_start_us + window_len_us) {
        counts[e.y as usize * w + e.x as usize] += 1;
    }
    AggregateFrame::new(h, w, counts)
}
