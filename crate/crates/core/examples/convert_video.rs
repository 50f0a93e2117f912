//! Converts a rendered frame sequence into events and shows how the
//! contrast threshold changes the event count.
//!
//! cargo run --release --example convert_video

use tripwire::events::Polarity;
use tripwire::synth::{frames_to_events, min_frame_rate, render_scene, ConverterParams, SceneConfig};

fn main() -> tripwire::Result<()> {
    let mut scene = SceneConfig {
        seed: 7,
        duration_s: 0.2,
        fps: 2000.0,
        noise_rate: 0.0,
        ..Default::default()
    };
    scene.drone.present = true;
    scene.drone.body_px = 10.0;
    scene.drone.d_prop = 3.0;
    scene.drone.start = [8.0, 16.0];
    scene.drone.speed_px_s = 40.0;
    println!(
        "propeller tips need >= {:.0} fps; rendering at {}",
        min_frame_rate(scene.drone.d_prop, scene.drone.f_prop)?,
        scene.fps
    );
    let frames = render_scene(&scene)?;

    for threshold in [0.1, 0.2, 0.4] {
        let params = ConverterParams { threshold, ..Default::default() };
        let s = frames_to_events(&frames, &params)?;
        let on = s.events().iter().filter(|e| e.p == Polarity::Positive).count();
        println!(
            "C = {threshold}: {:6} events ({on} on, {} off) over {} ms",
            s.len(),
            s.len() - on,
            s.duration_us() / 1000
        );
    }
    Ok(())
}
