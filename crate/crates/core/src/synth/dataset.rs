use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{
    aggregate_window, bin_events, label_windows, read_events, write_events, AggregateFrame,
    BinnedSample, Event, EventStream, Label, Polarity,
};

use super::{ConverterParams, EventConverter, SceneConfig, SceneRenderer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetOptions {
    pub window_len_us: u64,
    pub step_us: u64,
    pub stride_us: u64,
    pub converter: ConverterParams,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            window_len_us: 50_000,
            step_us: 1_000,
            stride_us: 50_000,
            converter: ConverterParams::default(),
        }
    }
}

/// One simulated scene: its configuration, events and drone-visible spans.
#[derive(Clone, Debug)]
pub struct SceneEvents {
    pub config: SceneConfig,
    pub stream: EventStream,
    pub annotations: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: usize,
    pub label: Label,
    pub scale_px: f64,
    pub seed: u64,
    pub propellers: bool,
    pub scene: usize,
    pub window_start_us: u64,
    pub speed_px_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub width: u16,
    pub height: u16,
    pub window_len_us: u64,
    pub step_us: u64,
    pub stride_us: u64,
    pub samples: Vec<SampleRecord>,
}

/// Labelled samples for both network modes plus the scenes they came from.
/// `samples[i]`, `frames[i]` and `manifest.samples[i]` describe the same
/// window.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub scenes: Vec<SceneEvents>,
    pub samples: Vec<BinnedSample>,
    pub frames: Vec<AggregateFrame>,
    pub manifest: Manifest,
}

#[derive(Serialize, Deserialize)]
struct SceneEntry {
    config: SceneConfig,
    events_file: String,
    annotations: Vec<(u64, u64)>,
}

/// Renders a scene frame by frame, converts it to events, adds Poisson
/// background noise and records when the drone body is in view.
pub fn simulate_scene(config: &SceneConfig, converter: &ConverterParams) -> Result<SceneEvents> {
    let renderer = SceneRenderer::new(config.clone())?;
    let (w, h) = (config.width as usize, config.height as usize);
    let duration_us = config.duration_us();
    let frame_us = 1e6 / config.fps;
    let mut buf = vec![0.0f32; w * h];

    let mut visible = Vec::with_capacity(renderer.frame_count());
    visible.push(renderer.render_into(0, &mut buf));
    let mut conv = EventConverter::new(w, h, config.fps, *converter, &buf)?;
    let mut events = Vec::new();
    for k in 1..renderer.frame_count() {
        visible.push(renderer.render_into(k, &mut buf));
        conv.push_frame(&buf, &mut events)?;
    }

    if config.noise_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6e6f_6973_6521);
        let mean = config.noise_rate * (w * h) as f64 * duration_us as f64 * 1e-6;
        let n = Poisson::new(mean)
            .map_err(|e| Error::InvalidConfig(format!("noise rate: {e}")))?
            .sample(&mut rng) as usize;
        for _ in 0..n {
            let p = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            events.push(Event::new(
                rng.random_range(0..w) as u16,
                rng.random_range(0..h) as u16,
                rng.random_range(0..duration_us.max(1)),
                p,
            ));
        }
        events.sort_by_key(|e| (e.t, e.y, e.x));
    }

    // A visible frame k drives the events between frames k-1 and k+1.
    let mut annotations: Vec<(u64, u64)> = Vec::new();
    for (k, _) in visible.iter().enumerate().filter(|(_, v)| **v) {
        let a = ((k as f64 - 1.0) * frame_us).max(0.0).floor() as u64;
        let b = (((k + 1) as f64 * frame_us).ceil() as u64).min(duration_us);
        match annotations.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => annotations.push((a, b)),
        }
    }

    let stream = EventStream::new(config.width, config.height, duration_us, events)?;
    Ok(SceneEvents {
        config: config.clone(),
        stream,
        annotations,
    })
}

fn windows_of(
    scenes: Vec<SceneEvents>,
    options: &DatasetOptions,
) -> Result<Dataset> {
    let (width, height) = match scenes.first() {
        Some(s) => (s.config.width, s.config.height),
        None => (0, 0),
    };
    let mut samples = Vec::new();
    let mut frames = Vec::new();
    let mut records = Vec::new();
    for (scene_idx, scene) in scenes.iter().enumerate() {
        if (scene.config.width, scene.config.height) != (width, height) {
            return Err(Error::InvalidConfig(format!(
                "scene {scene_idx} geometry {}x{} differs from {width}x{height}",
                scene.config.width, scene.config.height
            )));
        }
        let windows = label_windows(
            &scene.stream,
            &scene.annotations,
            options.window_len_us,
            options.stride_us,
        )?;
        for win in windows {
            let sample = bin_events(&scene.stream, win.start_us, win.len_us, options.step_us)?
                .with_label(win.label);
            let frame = aggregate_window(&scene.stream, win.start_us, win.len_us)?
                .with_label(win.label);
            let drone = &scene.config.drone;
            records.push(SampleRecord {
                id: records.len(),
                label: win.label,
                scale_px: drone.body_px,
                seed: scene.config.seed,
                propellers: drone.present && drone.propellers_enabled,
                scene: scene_idx,
                window_start_us: win.start_us,
                speed_px_s: if drone.present { drone.speed_px_s } else { 0.0 },
            });
            samples.push(sample);
            frames.push(frame);
        }
    }
    Ok(Dataset {
        scenes,
        samples,
        frames,
        manifest: Manifest {
            width,
            height,
            window_len_us: options.window_len_us,
            step_us: options.step_us,
            stride_us: options.stride_us,
            samples: records,
        },
    })
}

/// Simulates every scene and cuts it into labelled windows. Scenes are
/// simulated in parallel and assembled in input order.
pub fn generate_dataset(configs: &[SceneConfig], options: &DatasetOptions) -> Result<Dataset> {
    use rayon::prelude::*;
    let scenes = configs
        .par_iter()
        .map(|c| simulate_scene(c, &options.converter))
        .collect::<Result<Vec<_>>>()?;
    windows_of(scenes, options)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.manifest.samples.iter().map(|r| r.label).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.manifest.samples.iter().filter(|r| r.label == label).count()
    }

    /// Writes `manifest.json`, `scenes.json` and one event CSV per scene.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("events"))?;
        let mut entries = Vec::with_capacity(self.scenes.len());
        for (i, scene) in self.scenes.iter().enumerate() {
            let name = format!("events/scene_{i:04}.csv");
            write_events(&scene.stream, &dir.join(&name))?;
            entries.push(SceneEntry {
                config: scene.config.clone(),
                events_file: name,
                annotations: scene.annotations.clone(),
            });
        }
        std::fs::write(dir.join("scenes.json"), serde_json::to_string_pretty(&entries)?)?;
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&self.manifest)?,
        )?;
        Ok(())
    }

    /// Reloads a dataset written by [`Dataset::write`], re-binning the
    /// windows listed in the manifest.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.json");
        let scenes_path = dir.join("scenes.json");
        for p in [&manifest_path, &scenes_path] {
            if !p.exists() {
                return Err(Error::MissingInput(PathBuf::from(p)));
            }
        }
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
        let entries: Vec<SceneEntry> =
            serde_json::from_str(&std::fs::read_to_string(&scenes_path)?)?;
        let scenes = entries
            .into_iter()
            .map(|e| {
                Ok(SceneEvents {
                    stream: read_events(&dir.join(&e.events_file))?,
                    config: e.config,
                    annotations: e.annotations,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut samples = Vec::with_capacity(manifest.samples.len());
        let mut frames = Vec::with_capacity(manifest.samples.len());
        for rec in &manifest.samples {
            let scene = scenes.get(rec.scene).ok_or_else(|| {
                Error::InvalidConfig(format!("sample {} references missing scene {}", rec.id, rec.scene))
            })?;
            samples.push(
                bin_events(
                    &scene.stream,
                    rec.window_start_us,
                    manifest.window_len_us,
                    manifest.step_us,
                )?
                .with_label(rec.label),
            );
            frames.push(
                aggregate_window(&scene.stream, rec.window_start_us, manifest.window_len_us)?
                    .with_label(rec.label),
            );
        }
        Ok(Self {
            scenes,
            samples,
            frames,
            manifest,
        })
    }

    /// Sub-dataset of the given sample indices (scenes are shared).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut manifest = self.manifest.clone();
        manifest.samples = indices.iter().map(|&i| self.manifest.samples[i].clone()).collect();
        Dataset {
            scenes: self.scenes.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            frames: indices.iter().map(|&i| self.frames[i].clone()).collect(),
            manifest,
        }
    }
}
