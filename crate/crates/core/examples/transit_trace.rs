//! Trains a small spiking detector, then slides it over a drone crossing
//! the field of view and prints the output spikes per window.
//!
//! cargo run --release --example transit_trace -- [epochs]

use tripwire::eval::spike_rate_trace;
use tripwire::events::Label;
use tripwire::snn::Mode;
use tripwire::synth::{generate_dataset, simulate_scene, transit_scene, ConverterParams, DatasetOptions, DeskRecipe};
use tripwire::train::{initial_network, train_snn, TrainConfig};

fn main() -> tripwire::Result<()> {
    let epochs = std::env::args().nth(1).map_or(10, |s| s.parse().expect("epochs"));
    let recipe = DeskRecipe { seed: 4, ..Default::default() };
    let opts = DatasetOptions::default();
    let data = generate_dataset(&recipe.scenes(), &opts)?;
    let config = TrainConfig {
        epochs,
        seed: 4,
        surrogate_beta: 3.0,
        ..Default::default()
    };
    let spec = initial_network(Mode::Spiking, 32, 32, &config);
    let model = train_snn(&data.samples, &spec, &config)?.spec;

    let scene = transit_scene(9, 32, 32, recipe.scales_px[0], 60.0, 0.3, recipe.fps);
    let ev = simulate_scene(&scene, &ConverterParams::default())?;
    println!("drone body in view: {:?} us", ev.annotations);
    for p in spike_rate_trace(&model, &ev.stream, opts.window_len_us, opts.stride_us, opts.step_us)? {
        let bar = "#".repeat((p.spikes_drone / 4).min(60) as usize);
        let mark = if p.decision == Label::Drone { "D" } else { "." };
        println!(
            "{:5} ms  {mark}  drone {:4}  no-drone {:4}  {bar}",
            p.t_us / 1000,
            p.spikes_drone,
            p.spikes_nodrone
        );
    }
    Ok(())
}
