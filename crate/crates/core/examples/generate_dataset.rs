//! Renders the desk recipe, converts it to events and writes a labelled
//! dataset directory.
//!
//! cargo run --release --example generate_dataset -- [out_dir] [seed]

use std::path::PathBuf;

use tripwire::events::Label;
use tripwire::synth::{generate_dataset, DatasetOptions, DeskRecipe};

fn main() -> tripwire::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("desk-data", |s| s.as_str()));
    let seed = args.get(1).map_or(1, |s| s.parse().expect("seed"));

    let recipe = DeskRecipe {
        seed,
        scales_px: vec![8.0, 12.0],
        drone_scenes_per_scale: 6,
        empty_scenes_per_scale: 6,
        ..Default::default()
    };
    let data = generate_dataset(&recipe.scenes(), &DatasetOptions::default())?;
    data.write(&out)?;

    println!("{} scenes -> {}", data.scenes.len(), out.display());
    for (label, name) in [(Label::Drone, "drone"), (Label::NoDrone, "no drone")] {
        let totals: Vec<u64> = data
            .samples
            .iter()
            .filter(|s| s.label() == Some(label))
            .map(|s| s.total())
            .collect();
        let mean = totals.iter().sum::<u64>() as f64 / totals.len().max(1) as f64;
        println!("{name:>9}: {:3} windows, {mean:7.0} events per window", totals.len());
    }
    Ok(())
}
