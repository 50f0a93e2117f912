//! Trains the spiking network on a desk-scale synthetic dataset and prints
//! the per-epoch history.
//!
//! cargo run --release --example train_snn -- [epochs] [seed] [init_gain] [learning_rate] [beta]

use std::time::Instant;

use tripwire::snn::Mode;
use tripwire::synth::{generate_dataset, DatasetOptions, DeskRecipe};
use tripwire::train::{initial_network, train_snn, TrainConfig};

fn main() -> tripwire::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(10, |s| s.parse().expect("epochs"));
    let seed = args.get(1).map_or(1, |s| s.parse().expect("seed"));
    let gain = args.get(2).map_or(1.0, |s| s.parse().expect("init gain"));
    let lr = args.get(3).map_or(1e-3, |s| s.parse().expect("learning rate"));
    let beta = args.get(4).map_or(3.0, |s| s.parse().expect("surrogate beta"));

    let t0 = Instant::now();
    let recipe = DeskRecipe {
        seed,
        ..Default::default()
    };
    let data = generate_dataset(&recipe.scenes(), &DatasetOptions::default())?;
    println!(
        "{} samples ({} drone) in {:.1}s",
        data.len(),
        data.count(tripwire::events::Label::Drone),
        t0.elapsed().as_secs_f64()
    );

    let config = TrainConfig {
        epochs,
        seed,
        init_gain: gain,
        learning_rate: lr,
        surrogate_beta: beta,
        ..Default::default()
    };
    let spec = initial_network(Mode::Spiking, recipe.height as usize, recipe.width as usize, &config);
    let t1 = Instant::now();
    let out = train_snn(&data.samples, &spec, &config)?;
    for r in &out.history {
        println!(
            "epoch {:2}  loss {:.4}  val_acc {:.3}  mean_sops {:.0}",
            r.epoch,
            r.loss,
            r.val_acc,
            r.mean_sops.unwrap_or(0.0)
        );
    }
    println!(
        "best epoch {} in {:.1}s",
        out.best_epoch,
        t1.elapsed().as_secs_f64()
    );
    Ok(())
}
