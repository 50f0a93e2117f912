//! Runs the full-size spiking network on one simulated 128x128 window and
//! reports where the synaptic operations are spent, next to the FLOPs of
//! the equivalent ReLU network.
//!
//! cargo run --release --example inference_sops

use tripwire::events::bin_events;
use tripwire::snn::{count_flops, snn_forward, Mode, NetworkSpec};
use tripwire::synth::{simulate_scene, ConverterParams, SceneConfig};

fn main() -> tripwire::Result<()> {
    let mut scene = SceneConfig {
        seed: 3,
        width: 128,
        height: 128,
        duration_s: 0.06,
        fps: 4500.0,
        ..Default::default()
    };
    scene.drone.present = true;
    scene.drone.body_px = 30.0;
    scene.drone.d_prop = 9.0;
    scene.drone.start = [64.0, 64.0];
    let ev = simulate_scene(&scene, &ConverterParams::default())?;
    let sample = bin_events(&ev.stream, 0, 50_000, 1_000)?;

    let spec = NetworkSpec::default_architecture(Mode::Spiking, 128, 128).kaiming_init(1, 1.0);
    println!("{} neurons, {} input events", spec.neuron_count()?, sample.total());
    let trace = snn_forward(&spec, &sample)?;
    for (l, (sops, spikes)) in trace.sops_per_layer.iter().zip(&trace.layer_spikes).enumerate() {
        println!("layer {l}: {sops:10} SOPs, {spikes:8} spikes out");
    }
    println!("total {} SOPs, output spikes {:?}", trace.total_sops, trace.totals());
    let relu = NetworkSpec::default_architecture(Mode::Relu, 128, 128);
    println!("ReLU network: {} FLOPs per inference", count_flops(&relu)?);
    Ok(())
}
