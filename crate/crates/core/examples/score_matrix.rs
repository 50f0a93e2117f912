//! Trains one spiking model per drone size and scores every model on every
//! size, giving the train/test generalization matrix.
//!
//! cargo run --release --example score_matrix -- [epochs]

use std::collections::BTreeMap;

use tripwire::eval::{format_metric, score_matrix};
use tripwire::snn::Mode;
use tripwire::synth::{generate_dataset, DatasetOptions, DeskRecipe};
use tripwire::train::{initial_network, train_snn, TrainConfig};

fn main() -> tripwire::Result<()> {
    let epochs = std::env::args().nth(1).map_or(8, |s| s.parse().expect("epochs"));
    let opts = DatasetOptions::default();
    let mut models = BTreeMap::new();
    let mut tests = BTreeMap::new();
    for (i, scale) in [6.0, 10.0, 14.0].into_iter().enumerate() {
        let recipe = |seed: u64, n: usize| DeskRecipe {
            seed,
            scales_px: vec![scale],
            drone_scenes_per_scale: n,
            empty_scenes_per_scale: n,
            ..Default::default()
        };
        let train = generate_dataset(&recipe(10 + i as u64, 12).scenes(), &opts)?;
        let test = generate_dataset(&recipe(20 + i as u64, 5).scenes(), &opts)?;
        let config = TrainConfig {
            epochs,
            seed: 1,
            surrogate_beta: 3.0,
            ..Default::default()
        };
        let spec = initial_network(Mode::Spiking, 32, 32, &config);
        let name = format!("{scale}px");
        println!("training {name}");
        models.insert(name.clone(), train_snn(&train.samples, &spec, &config)?.spec);
        tests.insert(name, test.samples);
    }
    let m = score_matrix(&models, &tests)?;
    println!("F1, rows = trained on, columns = tested on");
    println!("{:>8} {}", "", m.conditions.iter().map(|c| format!("{c:>8}")).collect::<String>());
    for (c, row) in m.conditions.iter().zip(&m.f1) {
        println!("{c:>8} {}", row.iter().map(|v| format!("{:>8}", format_metric(*v))).collect::<String>());
    }
    Ok(())
}
