use crate::error::{Error, Result};

/// Grayscale frames with intensities in `[0, 1]`, row-major, at `fps`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    fps: f64,
    frames: Vec<Vec<f32>>,
}

impl FrameSequence {
    pub fn new(width: usize, height: usize, fps: f64, frames: Vec<Vec<f32>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "frame geometry {width}x{height} must be non-empty"
            )));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.len() != width * height {
                return Err(Error::Shape(format!(
                    "frame {k} has {} pixels, expected {}",
                    f.len(),
                    width * height
                )));
            }
            if let Some(v) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidConfig(format!(
                    "frame {k} intensity {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            fps,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Vec<f32>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}
