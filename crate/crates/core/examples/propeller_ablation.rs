//! Trains on drones with spinning propellers and tests on the same scenes
//! with the propellers removed. A small drop means the network keys on the
//! body shape rather than the propeller flicker.
//!
//! cargo run --release --example propeller_ablation -- [epochs]

use tripwire::eval::{evaluate_snn, format_metric};
use tripwire::snn::Mode;
use tripwire::synth::{generate_dataset, DatasetOptions, DeskRecipe};
use tripwire::train::{initial_network, train_snn, TrainConfig};

fn main() -> tripwire::Result<()> {
    let epochs = std::env::args().nth(1).map_or(10, |s| s.parse().expect("epochs"));
    let opts = DatasetOptions::default();
    let train = generate_dataset(&DeskRecipe { seed: 5, ..Default::default() }.scenes(), &opts)?;
    let config = TrainConfig {
        epochs,
        seed: 2,
        surrogate_beta: 3.0,
        ..Default::default()
    };
    let model = train_snn(&train.samples, &initial_network(Mode::Spiking, 32, 32, &config), &config)?.spec;

    let test = DeskRecipe {
        seed: 6,
        drone_scenes_per_scale: 10,
        empty_scenes_per_scale: 10,
        ..Default::default()
    };
    for propellers in [true, false] {
        let data = generate_dataset(
            &DeskRecipe {
                propellers_enabled: propellers,
                ..test.clone()
            }
            .scenes(),
            &opts,
        )?;
        let (_, c) = evaluate_snn(&model, &data.samples)?;
        println!(
            "propellers {:>3}: accuracy {}  ({} tp, {} fp, {} fn, {} tn)",
            if propellers { "on" } else { "off" },
            format_metric(c.accuracy()),
            c.tp,
            c.fp,
            c.fn_,
            c.tn
        );
    }
    Ok(())
}
