//! Procedural 2D scenes: a bright sky with a dark drone silhouette, optional
//! spinning propellers, thrown balls and swaying branches.
//!
//! Shapes are rasterised from signed distances with a one-pixel linear ramp,
//! `coverage = clamp(0.5 - d, 0, 1)`, so sub-pixel motion changes
//! intensities smoothly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{min_frame_rate, FrameSequence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DroneConfig {
    pub present: bool,
    /// Tip-to-tip span of the body cross in pixels.
    pub body_px: f64,
    /// Propeller diameter in pixels.
    pub d_prop: f64,
    /// Propeller rotation frequency in Hz.
    pub f_prop: f64,
    pub speed_px_s: f64,
    /// Body centre at `t = 0`, pixels.
    pub start: [f64; 2],
    /// Direction of travel, degrees, 0 = +x, 90 = +y (down).
    pub heading_deg: f64,
    /// Body orientation, degrees.
    pub yaw_deg: f64,
    pub propellers_enabled: bool,
    /// Silhouette intensity.
    pub intensity: f32,
}

impl Default for DroneConfig {
    fn default() -> Self {
        Self {
            present: true,
            body_px: 10.0,
            d_prop: 3.0,
            f_prop: 150.0,
            speed_px_s: 40.0,
            start: [16.0, 16.0],
            heading_deg: 0.0,
            yaw_deg: 0.0,
            propellers_enabled: true,
            intensity: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distractor {
    /// A disc thrown on a parabolic arc; gravity points to `+y`.
    Ball {
        radius_px: f64,
        start: [f64; 2],
        velocity: [f64; 2],
        gravity_px_s2: f64,
        intensity: f32,
    },
    /// A bar reaching in from the image border whose tip sways sinusoidally.
    Branch {
        edge: Edge,
        /// Position of the anchor along the edge, pixels.
        anchor_px: f64,
        length_px: f64,
        thickness_px: f64,
        amplitude_px: f64,
        freq_hz: f64,
        phase: f64,
        intensity: f32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub seed: u64,
    pub width: u16,
    pub height: u16,
    pub duration_s: f64,
    pub fps: f64,
    pub background: f32,
    pub drone: DroneConfig,
    pub distractors: Vec<Distractor>,
    /// Background events per pixel per second, injected after conversion.
    pub noise_rate: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 32,
            height: 32,
            duration_s: 0.5,
            fps: 2000.0,
            background: 0.8,
            drone: DroneConfig::default(),
            distractors: Vec::new(),
            noise_rate: 0.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("scene geometry {}x{}", self.width, self.height));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} s must be positive", self.duration_s));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps {} must be positive", self.fps));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return bad(format!("background {} outside [0, 1]", self.background));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return bad(format!("noise rate {} must be non-negative", self.noise_rate));
        }
        let d = &self.drone;
        if d.present {
            if !(d.body_px > 0.0) {
                return bad(format!("drone body size {} must be positive", d.body_px));
            }
            if d.d_prop < 0.0 || d.f_prop < 0.0 || d.speed_px_s < 0.0 {
                return bad("drone propeller size, frequency and speed must be non-negative".into());
            }
            if !(0.0..=1.0).contains(&d.intensity) {
                return bad(format!("drone intensity {} outside [0, 1]", d.intensity));
            }
            if d.propellers_enabled {
                let bound = min_frame_rate(d.d_prop, d.f_prop)?;
                if self.fps < bound {
                    return Err(Error::FrameRateTooLow {
                        fps: self.fps,
                        bound,
                    });
                }
            }
        }
        for (i, dis) in self.distractors.iter().enumerate() {
            let (size, intensity) = match dis {
                Distractor::Ball {
                    radius_px,
                    intensity,
                    ..
                } => (*radius_px, *intensity),
                Distractor::Branch {
                    length_px,
                    thickness_px,
                    intensity,
                    ..
                } => (length_px.min(*thickness_px), *intensity),
            };
            if !(size > 0.0) {
                return bad(format!("distractor {i} has non-positive size"));
            }
            if !(0.0..=1.0).contains(&intensity) {
                return bad(format!("distractor {i} intensity outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Number of rendered frames, `floor(duration * fps) + 1`.
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).floor() as usize + 1
    }

    /// Exact stream duration in microseconds covered by the frames.
    pub fn duration_us(&self) -> u64 {
        ((self.frame_count() - 1) as f64 * 1e6 / self.fps).ceil() as u64
    }
}

type Point = [f64; 2];

fn seg_distance(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
    let (apx, apy) = (p[0] - a[0], p[1] - a[1]);
    let len2 = abx * abx + aby * aby;
    let h = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (apx - h * abx, apy - h * aby);
    (dx * dx + dy * dy).sqrt()
}

fn coverage(signed_distance: f64) -> f64 {
    (0.5 - signed_distance).clamp(0.0, 1.0)
}

/// Shapes as signed-distance primitives.
#[derive(Clone, Copy, Debug)]
enum Shape {
    Disc { c: Point, r: f64 },
    Capsule { a: Point, b: Point, r: f64 },
}

impl Shape {
    fn distance(&self, p: Point) -> f64 {
        match *self {
            Shape::Disc { c, r } => ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r,
            Shape::Capsule { a, b, r } => seg_distance(p, a, b) - r,
        }
    }

    fn bounds(&self) -> (Point, Point) {
        match *self {
            Shape::Disc { c, r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            Shape::Capsule { a, b, r } => (
                [a[0].min(b[0]) - r, a[1].min(b[1]) - r],
                [a[0].max(b[0]) + r, a[1].max(b[1]) + r],
            ),
        }
    }
}

/// Union of shapes painted with one intensity.
struct Layer {
    shapes: Vec<Shape>,
    intensity: f32,
}

impl Layer {
    /// Blends the layer into `img` and returns whether any pixel was touched.
    fn paint(&self, img: &mut [f32], width: usize, height: usize) -> bool {
        if self.shapes.is_empty() {
            return false;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for s in &self.shapes {
            let (a, b) = s.bounds();
            lo = [lo[0].min(a[0]), lo[1].min(a[1])];
            hi = [hi[0].max(b[0]), hi[1].max(b[1])];
        }
        // The ramp reaches half a pixel outside the shape.
        let x0 = (lo[0] - 1.0).floor().max(0.0) as usize;
        let y0 = (lo[1] - 1.0).floor().max(0.0) as usize;
        let x1 = ((hi[0] + 1.0).ceil().max(0.0) as usize).min(width);
        let y1 = ((hi[1] + 1.0).ceil().max(0.0) as usize).min(height);
        let mut touched = false;
        for y in y0..y1 {
            for x in x0..x1 {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let d = self
                    .shapes
                    .iter()
                    .map(|s| s.distance(p))
                    .fold(f64::INFINITY, f64::min);
                let cov = coverage(d) as f32;
                if cov > 0.0 {
                    let px = &mut img[y * width + x];
                    *px += cov * (self.intensity - *px);
                    touched = true;
                }
            }
        }
        touched
    }
}

/// Renders individual frames of a scene on demand.
#[derive(Clone, Debug)]
pub struct SceneRenderer {
    config: SceneConfig,
    prop_phase: [f64; 4],
}

impl SceneRenderer {
    pub fn new(config: SceneConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut prop_phase = [0.0; 4];
        for p in prop_phase.iter_mut() {
            *p = rng.random_range(0.0..PI);
        }
        Ok(Self { config, prop_phase })
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn frame_count(&self) -> usize {
        self.config.frame_count()
    }

    pub fn frame_time_s(&self, k: usize) -> f64 {
        k as f64 / self.config.fps
    }

    pub fn drone_center(&self, t: f64) -> Point {
        let d = &self.config.drone;
        let h = d.heading_deg.to_radians();
        [
            d.start[0] + d.speed_px_s * t * h.cos(),
            d.start[1] + d.speed_px_s * t * h.sin(),
        ]
    }

    fn arm_tips(&self, t: f64) -> [Point; 4] {
        let d = &self.config.drone;
        let c = self.drone_center(t);
        let r = d.body_px / 2.0;
        let mut tips = [[0.0; 2]; 4];
        for (i, tip) in tips.iter_mut().enumerate() {
            let a = (d.yaw_deg + 45.0 + 90.0 * i as f64).to_radians();
            *tip = [c[0] + r * a.cos(), c[1] + r * a.sin()];
        }
        tips
    }

    fn body_layer(&self, t: f64) -> Layer {
        let d = &self.config.drone;
        let c = self.drone_center(t);
        let tips = self.arm_tips(t);
        let arm_r = (0.08 * d.body_px).max(0.5);
        Layer {
            shapes: vec![
                Shape::Disc {
                    c,
                    r: 0.22 * d.body_px,
                },
                Shape::Capsule {
                    a: tips[0],
                    b: tips[2],
                    r: arm_r,
                },
                Shape::Capsule {
                    a: tips[1],
                    b: tips[3],
                    r: arm_r,
                },
            ],
            intensity: d.intensity,
        }
    }

    fn propeller_layer(&self, t: f64) -> Layer {
        let d = &self.config.drone;
        let half = d.d_prop / 2.0;
        let blade_r = (0.1 * d.d_prop).max(0.35);
        let shapes = self
            .arm_tips(t)
            .iter()
            .enumerate()
            .map(|(i, tip)| {
                let dir = if i % 2 == 0 { 1.0 } else { -1.0 };
                let a = self.prop_phase[i] + dir * 2.0 * PI * d.f_prop * t;
                let (dx, dy) = (half * a.cos(), half * a.sin());
                Shape::Capsule {
                    a: [tip[0] - dx, tip[1] - dy],
                    b: [tip[0] + dx, tip[1] + dy],
                    r: blade_r,
                }
            })
            .collect();
        Layer {
            shapes,
            intensity: d.intensity,
        }
    }

    fn distractor_layer(&self, dis: &Distractor, t: f64) -> Layer {
        let (w, h) = (self.config.width as f64, self.config.height as f64);
        match *dis {
            Distractor::Ball {
                radius_px,
                start,
                velocity,
                gravity_px_s2,
                intensity,
            } => Layer {
                shapes: vec![Shape::Disc {
                    c: [
                        start[0] + velocity[0] * t,
                        start[1] + velocity[1] * t + 0.5 * gravity_px_s2 * t * t,
                    ],
                    r: radius_px,
                }],
                intensity,
            },
            Distractor::Branch {
                edge,
                anchor_px,
                length_px,
                thickness_px,
                amplitude_px,
                freq_hz,
                phase,
                intensity,
            } => {
                let (anchor, inward, along) = match edge {
                    Edge::Left => ([0.0, anchor_px], [1.0, 0.0], [0.0, 1.0]),
                    Edge::Right => ([w, anchor_px], [-1.0, 0.0], [0.0, 1.0]),
                    Edge::Top => ([anchor_px, 0.0], [0.0, 1.0], [1.0, 0.0]),
                    Edge::Bottom => ([anchor_px, h], [0.0, -1.0], [1.0, 0.0]),
                };
                let sway = amplitude_px * (2.0 * PI * freq_hz * t + phase).sin();
                let tip = [
                    anchor[0] + length_px * inward[0] + sway * along[0],
                    anchor[1] + length_px * inward[1] + sway * along[1],
                ];
                let mid = [
                    anchor[0] + 0.5 * length_px * inward[0] + 0.3 * sway * along[0],
                    anchor[1] + 0.5 * length_px * inward[1] + 0.3 * sway * along[1],
                ];
                let r = thickness_px / 2.0;
                Layer {
                    shapes: vec![
                        Shape::Capsule { a: anchor, b: mid, r },
                        Shape::Capsule {
                            a: mid,
                            b: tip,
                            r: 0.7 * r,
                        },
                    ],
                    intensity,
                }
            }
        }
    }

    /// Renders frame `k` into `buf` and reports whether the drone body
    /// touches the field of view.
    pub fn render_into(&self, k: usize, buf: &mut [f32]) -> bool {
        let (w, h) = (self.config.width as usize, self.config.height as usize);
        debug_assert_eq!(buf.len(), w * h);
        buf.fill(self.config.background);
        let t = self.frame_time_s(k);
        for dis in &self.config.distractors {
            self.distractor_layer(dis, t).paint(buf, w, h);
        }
        let d = &self.config.drone;
        if !d.present {
            return false;
        }
        let visible = self.body_layer(t).paint(buf, w, h);
        if d.propellers_enabled && d.d_prop > 0.0 {
            self.propeller_layer(t).paint(buf, w, h);
        }
        visible
    }

    /// Whether the drone body covers any pixel at frame `k`.
    pub fn drone_visible(&self, k: usize) -> bool {
        if !self.config.drone.present {
            return false;
        }
        let (w, h) = (self.config.width as usize, self.config.height as usize);
        let mut scratch = vec![self.config.background; w * h];
        self.body_layer(self.frame_time_s(k)).paint(&mut scratch, w, h)
    }
}

/// Renders every frame of the scene.
pub fn render_scene(config: &SceneConfig) -> Result<FrameSequence> {
    let r = SceneRenderer::new(config.clone())?;
    let (w, h) = (config.width as usize, config.height as usize);
    let frames = (0..r.frame_count())
        .map(|k| {
            let mut buf = vec![0.0; w * h];
            r.render_into(k, &mut buf);
            buf
        })
        .collect();
    FrameSequence::new(w, h, config.fps, frames)
}
