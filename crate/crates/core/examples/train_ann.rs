//! Trains the ReLU baseline on aggregated event-count frames and evaluates
//! it on a held-out recipe.
//!
//! cargo run --release --example train_ann -- [epochs] [seed]

use tripwire::eval::{evaluate_ann, format_metric, metrics};
use tripwire::snn::{count_flops, Mode};
use tripwire::synth::{generate_dataset, DatasetOptions, DeskRecipe};
use tripwire::train::{initial_network, train_ann, TrainConfig};

fn main() -> tripwire::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(15, |s| s.parse().expect("epochs"));
    let seed = args.get(1).map_or(1, |s| s.parse().expect("seed"));

    let opts = DatasetOptions::default();
    let train = generate_dataset(&DeskRecipe { seed, ..Default::default() }.scenes(), &opts)?;
    let test_recipe = DeskRecipe {
        seed: seed + 1000,
        drone_scenes_per_scale: 8,
        empty_scenes_per_scale: 8,
        ..Default::default()
    };
    let test = generate_dataset(&test_recipe.scenes(), &opts)?;

    let config = TrainConfig { epochs, seed, ..Default::default() };
    let spec = initial_network(Mode::Relu, 32, 32, &config);
    let out = train_ann(&train.frames, &spec, &config)?;
    for r in &out.history {
        println!("epoch {:2}  loss {:.4}  val_acc {:.3}", r.epoch, r.loss, r.val_acc);
    }
    let (_, counts) = evaluate_ann(&out.spec, &test.frames)?;
    let m = metrics(&counts);
    println!(
        "best epoch {}: test recall {} fdr {} f1 {}; {} FLOPs per inference",
        out.best_epoch,
        format_metric(m.recall),
        format_metric(m.fdr),
        format_metric(m.f1),
        count_flops(&out.spec)?
    );
    Ok(())
}
