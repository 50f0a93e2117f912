mod common;

use common::checks;
use proptest::prelude::*;
use tripwire::power::{battery_life, speck_power, ScenarioConfig, SpeckPowerParams};

#[test]
fn reference_operating_points() {
    checks::tx1_power().unwrap();
    checks::speck_power_model().unwrap();
    checks::battery_endpoints().unwrap();
}

proptest! {
    #[test]
    fn battery_life_decreases_with_load(a in 0.0f64..5000.0, b in 0.0f64..5000.0) {
        let cfg = ScenarioConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(battery_life(lo, &cfg) >= battery_life(hi, &cfg));
    }

    #[test]
    fn speck_power_is_affine(r1 in 0.0f64..1e7, r2 in 0.0f64..1e7) {
        let p = SpeckPowerParams::default();
        let mid = speck_power((r1 + r2) / 2.0, &p);
        let avg = (speck_power(r1, &p) + speck_power(r2, &p)) / 2.0;
        prop_assert!((mid - avg).abs() <= 1e-9 * avg);
    }
}
