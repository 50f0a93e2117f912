//! Scene-list builders for desk-scale experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Distractor, DroneConfig, Edge, SceneConfig};

/// A balanced mix of drone scenes and drone-free scenes (thrown balls,
/// swaying branches, empty sky) at one or more drone scales.
///
/// Drone scenes keep the drone in view for the whole scene; drone-free
/// scenes carry the scale as a nominal condition tag so per-scale splits
/// stay balanced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeskRecipe {
    pub seed: u64,
    pub width: u16,
    pub height: u16,
    pub scene_duration_s: f64,
    pub fps: f64,
    pub scales_px: Vec<f64>,
    pub drone_scenes_per_scale: usize,
    pub empty_scenes_per_scale: usize,
    pub propellers_enabled: bool,
    pub noise_rate: f64,
}

impl Default for DeskRecipe {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 32,
            height: 32,
            scene_duration_s: 0.5,
            fps: 2000.0,
            scales_px: vec![10.0],
            drone_scenes_per_scale: 20,
            empty_scenes_per_scale: 20,
            propellers_enabled: true,
            noise_rate: 1.0,
        }
    }
}

impl DeskRecipe {
    pub fn scenes(&self) -> Vec<SceneConfig> {
        let mut out = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for &scale in &self.scales_px {
            for _ in 0..self.drone_scenes_per_scale {
                out.push(self.drone_scene(&mut rng, scale));
            }
            for i in 0..self.empty_scenes_per_scale {
                out.push(self.empty_scene(&mut rng, scale, i));
            }
        }
        out
    }

    fn base(&self, rng: &mut ChaCha8Rng) -> SceneConfig {
        SceneConfig {
            seed: rng.random(),
            width: self.width,
            height: self.height,
            duration_s: self.scene_duration_s,
            fps: self.fps,
            noise_rate: self.noise_rate,
            ..Default::default()
        }
    }

    fn drone_scene(&self, rng: &mut ChaCha8Rng, scale: f64) -> SceneConfig {
        let mut c = self.base(rng);
        let (w, h) = (self.width as f64, self.height as f64);
        let speed = rng.random_range(20.0..60.0);
        let heading: f64 = rng.random_range(0.0..2.0 * PI);
        let travel = speed * self.scene_duration_s;
        // Keep the whole path inside the frame, centred on a random point.
        let margin = scale / 2.0;
        let (dx, dy) = (travel * heading.cos(), travel * heading.sin());
        let cx_lo = margin + dx.abs() / 2.0;
        let cy_lo = margin + dy.abs() / 2.0;
        let cx = if w - 2.0 * cx_lo > 0.0 {
            rng.random_range(cx_lo..w - cx_lo)
        } else {
            w / 2.0
        };
        let cy = if h - 2.0 * cy_lo > 0.0 {
            rng.random_range(cy_lo..h - cy_lo)
        } else {
            h / 2.0
        };
        c.drone = DroneConfig {
            present: true,
            body_px: scale,
            d_prop: 0.3 * scale,
            f_prop: rng.random_range(100.0..150.0),
            speed_px_s: speed,
            start: [cx - dx / 2.0, cy - dy / 2.0],
            heading_deg: heading.to_degrees(),
            yaw_deg: rng.random_range(0.0..90.0),
            propellers_enabled: self.propellers_enabled,
            intensity: rng.random_range(0.05..0.25),
        };
        c
    }

    fn empty_scene(&self, rng: &mut ChaCha8Rng, scale: f64, index: usize) -> SceneConfig {
        let mut c = self.base(rng);
        let (w, h) = (self.width as f64, self.height as f64);
        c.drone = DroneConfig {
            present: false,
            body_px: scale,
            propellers_enabled: self.propellers_enabled,
            ..Default::default()
        };
        match index % 3 {
            0 => {
                let r = rng.random_range(0.12..0.25) * scale;
                let dur = self.scene_duration_s;
                let left_to_right = rng.random_bool(0.5);
                let vx = (w + 4.0 * r) / dur * rng.random_range(1.0..1.6);
                let x0 = if left_to_right { -2.0 * r } else { w + 2.0 * r };
                let g = rng.random_range(40.0..120.0);
                let y0 = rng.random_range(0.3 * h..0.7 * h);
                // Apex near the middle of the scene.
                let vy = -g * dur / 2.0 * rng.random_range(0.6..1.0);
                c.distractors.push(Distractor::Ball {
                    radius_px: r,
                    start: [x0, y0],
                    velocity: [if left_to_right { vx } else { -vx }, vy],
                    gravity_px_s2: g,
                    intensity: rng.random_range(0.05..0.4),
                });
            }
            1 => {
                let edge = match rng.random_range(0..4) {
                    0 => Edge::Left,
                    1 => Edge::Right,
                    2 => Edge::Top,
                    _ => Edge::Bottom,
                };
                let along = if matches!(edge, Edge::Left | Edge::Right) { h } else { w };
                c.distractors.push(Distractor::Branch {
                    edge,
                    anchor_px: rng.random_range(0.2 * along..0.8 * along),
                    length_px: rng.random_range(0.25..0.45) * along,
                    thickness_px: rng.random_range(1.5..3.0),
                    amplitude_px: rng.random_range(1.0..3.0),
                    freq_hz: rng.random_range(0.8..3.0),
                    phase: rng.random_range(0.0..2.0 * PI),
                    intensity: rng.random_range(0.1..0.4),
                });
            }
            _ => {}
        }
        c
    }
}

/// A drone crossing the field of view horizontally: out of view for
/// `lead_s`, then in transit, then out of view again until the end.
pub fn transit_scene(
    seed: u64,
    width: u16,
    height: u16,
    body_px: f64,
    speed_px_s: f64,
    lead_s: f64,
    fps: f64,
) -> SceneConfig {
    let span = body_px + 2.0;
    let path = width as f64 + 2.0 * span;
    let crossing_s = path / speed_px_s;
    SceneConfig {
        seed,
        width,
        height,
        duration_s: 2.0 * lead_s + crossing_s,
        fps,
        noise_rate: 1.0,
        drone: DroneConfig {
            present: true,
            body_px,
            d_prop: 0.3 * body_px,
            f_prop: 120.0,
            speed_px_s,
            start: [-span - speed_px_s * lead_s, height as f64 / 2.0],
            heading_deg: 0.0,
            yaw_deg: 20.0,
            propellers_enabled: true,
            intensity: 0.1,
        },
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SceneRenderer;

    #[test]
    fn recipe_scenes_are_valid_and_balanced() {
        let r = DeskRecipe {
            scales_px: vec![8.0, 12.0],
            drone_scenes_per_scale: 4,
            empty_scenes_per_scale: 4,
            ..Default::default()
        };
        let scenes = r.scenes();
        assert_eq!(scenes.len(), 16);
        assert_eq!(scenes.iter().filter(|s| s.drone.present).count(), 8);
        for s in &scenes {
            s.validate().unwrap();
            if s.drone.present {
                let rend = SceneRenderer::new(s.clone()).unwrap();
                assert!(rend.drone_visible(0));
                assert!(rend.drone_visible(rend.frame_count() - 1));
            }
        }
        assert_eq!(scenes, r.scenes());
    }

    #[test]
    fn transit_enters_and_leaves() {
        let c = transit_scene(1, 32, 32, 10.0, 80.0, 0.2, 2000.0);
        let r = SceneRenderer::new(c).unwrap();
        assert!(!r.drone_visible(0));
        assert!(r.drone_visible(r.frame_count() / 2));
        assert!(!r.drone_visible(r.frame_count() - 1));
    }
}
