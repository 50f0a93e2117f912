//! Compares the neuromorphic chip and the embedded GPU on a 37 Wh battery,
//! and sweeps the fraction of time a drone is in view.
//!
//! cargo run --release --example power_budget

use tripwire::power::{
    battery_life, scenario_sweep, speck_power, tx1_dynamic_power, tx1_total_power, ScenarioConfig,
    SpeckPowerParams, Tx1PowerParams, HOURS_PER_MONTH, HOURS_PER_YEAR,
};

fn main() -> tripwire::Result<()> {
    let speck = SpeckPowerParams::default();
    let tx1 = Tx1PowerParams::default();
    let cfg = ScenarioConfig::default();

    let n_flop = 5.62e6;
    let gpu = tx1_total_power(n_flop, cfg.inference_rate_hz, &tx1);
    println!(
        "GPU: {:.2} mW dynamic, {gpu:.2} mW total -> {:.1} h",
        tx1_dynamic_power(n_flop, cfg.inference_rate_hz, &tx1),
        battery_life(gpu, &cfg)
    );
    println!("chip idle: {:.2} mW", speck_power(0.0, &speck));

    for p in scenario_sweep(&cfg, &speck, 6)? {
        println!(
            "drone in view {:3.0}%: {:5.2} mW -> {:6.0} h ({:.2} years, {:.1} months)",
            100.0 * p.drone_fraction,
            p.load_mw,
            p.hours,
            p.hours / HOURS_PER_YEAR,
            p.hours / HOURS_PER_MONTH
        );
    }
    Ok(())
}
