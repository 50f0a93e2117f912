//! Power models for the neuromorphic chip and an embedded GPU, and battery
//! operating time.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{BinnedSample, Label};
use crate::snn::{snn_forward, NetworkSpec};

pub const HOURS_PER_MONTH: f64 = 730.0;
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Affine chip power `p_idle + k * sop_rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeckPowerParams {
    /// mW
    pub p_idle: f64,
    /// mW per synaptic operation per second
    pub k: f64,
}

impl Default for SpeckPowerParams {
    fn default() -> Self {
        Self {
            p_idle: 1.48,
            k: 11.53e-6,
        }
    }
}

/// Chip power in mW at `sop_rate` synaptic operations per second.
pub fn speck_power(sop_rate: f64, params: &SpeckPowerParams) -> f64 {
    params.p_idle + params.k * sop_rate
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub params: SpeckPowerParams,
    /// Root mean squared residual, mW.
    pub rmse: f64,
}

/// Least-squares line through `(sop_rate, power_mw)` pairs.
pub fn fit_affine(measurements: &[(f64, f64)]) -> Result<AffineFit> {
    let n = measurements.len() as f64;
    let distinct = measurements
        .iter()
        .any(|m| m.0 != measurements.first().map_or(m.0, |f| f.0));
    if measurements.len() < 2 || !distinct {
        return Err(Error::Degenerate(
            "need at least two distinct SOP rates to fit a line".into(),
        ));
    }
    let mx = measurements.iter().map(|m| m.0).sum::<f64>() / n;
    let my = measurements.iter().map(|m| m.1).sum::<f64>() / n;
    let sxx: f64 = measurements.iter().map(|m| (m.0 - mx).powi(2)).sum();
    let sxy: f64 = measurements.iter().map(|m| (m.0 - mx) * (m.1 - my)).sum();
    let k = sxy / sxx;
    let p_idle = my - k * mx;
    let params = SpeckPowerParams { p_idle, k };
    let rmse = (measurements
        .iter()
        .map(|m| (m.1 - speck_power(m.0, &params)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(AffineFit { params, rmse })
}

/// Embedded GPU power parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tx1PowerParams {
    /// Thermal design power, W.
    pub p_tdp: f64,
    /// Idle power, W.
    pub p_idle: f64,
    /// Peak throughput, FLOP/s.
    pub t_max: f64,
}

impl Default for Tx1PowerParams {
    fn default() -> Self {
        Self {
            p_tdp: 6.0,
            p_idle: 2.64,
            t_max: 511e9,
        }
    }
}

/// Dynamic GPU power in mW: energy per FLOP at full load times FLOPs per
/// inference times inferences per second.
pub fn tx1_dynamic_power(n_flop: f64, rate_hz: f64, params: &Tx1PowerParams) -> f64 {
    (params.p_tdp - params.p_idle) / params.t_max * n_flop * rate_hz * 1000.0
}

/// Idle plus dynamic GPU power in mW. Independent of the input.
pub fn tx1_total_power(n_flop: f64, rate_hz: f64, params: &Tx1PowerParams) -> f64 {
    params.p_idle * 1000.0 + tx1_dynamic_power(n_flop, rate_hz, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub battery_wh: f64,
    pub self_discharge_per_month: f64,
    pub inference_rate_hz: f64,
    /// Synaptic operations per sample with a drone in view.
    pub sop_drone: f64,
    /// Synaptic operations per sample without a drone.
    pub sop_nodrone: f64,
}

impl Default for ScenarioConfig {
    /// Operating points at the ends of the published 0.3 to 5.65 mW
    /// dynamic power range.
    fn default() -> Self {
        let k = SpeckPowerParams::default().k;
        let rate = 20.0;
        Self {
            battery_wh: 37.0,
            self_discharge_per_month: 0.03,
            inference_rate_hz: rate,
            sop_drone: 5.65 / k / rate,
            sop_nodrone: 0.3 / k / rate,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.battery_wh > 0.0
            && self.self_discharge_per_month >= 0.0
            && self.inference_rate_hz > 0.0
            && self.sop_drone >= 0.0
            && self.sop_nodrone >= 0.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid scenario {self:?}")));
        }
        Ok(())
    }

    /// Self-discharge as a constant load in mW.
    pub fn self_discharge_mw(&self) -> f64 {
        self.self_discharge_per_month * self.battery_wh * 1000.0 / HOURS_PER_MONTH
    }

    /// Chip load in mW when a drone is in view a fraction `f` of the time.
    pub fn speck_load(&self, f: f64, speck: &SpeckPowerParams) -> f64 {
        let sops = (1.0 - f) * self.sop_nodrone + f * self.sop_drone;
        speck_power(self.inference_rate_hz * sops, speck)
    }
}

/// Hours until the battery is empty at a constant `load_mw`.
pub fn battery_life(load_mw: f64, config: &ScenarioConfig) -> f64 {
    config.battery_wh * 1000.0 / (load_mw + config.self_discharge_mw())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub drone_fraction: f64,
    pub load_mw: f64,
    pub hours: f64,
}

/// Operating time over `points` evenly spaced drone fractions in `[0, 1]`.
pub fn scenario_sweep(
    config: &ScenarioConfig,
    speck: &SpeckPowerParams,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    if points < 2 {
        return Err(Error::InvalidConfig("a sweep needs at least two points".into()));
    }
    Ok((0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            let load = config.speck_load(f, speck);
            SweepPoint {
                drone_fraction: f,
                load_mw: load,
                hours: battery_life(load, config),
            }
        })
        .collect())
}

pub fn write_sweep_csv(path: &Path, sweep: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in sweep {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `sop_per_s,power_mw` rows.
pub fn read_measurements(path: &Path) -> Result<Vec<(f64, f64)>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    #[derive(Deserialize)]
    struct Row {
        sop_per_s: f64,
        power_mw: f64,
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["sop_per_s", "power_mw"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header sop_per_s,power_mw".into(),
        });
    }
    r.deserialize::<Row>()
        .map(|row| Ok(row.map(|x| (x.sop_per_s, x.power_mw))?))
        .collect()
}

/// Min, median and max of a list of counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: u64,
    pub median: f64,
    pub max: u64,
    pub mean: f64,
}

pub fn summarize(values: &[u64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    };
    Some(Summary {
        count: n,
        min: v[0],
        median,
        max: v[n - 1],
        mean: v.iter().map(|&x| x as f64).sum::<f64>() / n as f64,
    })
}

/// Per-sample synaptic operations grouped by label.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SopDistribution {
    pub drone: Vec<u64>,
    pub no_drone: Vec<u64>,
}

impl SopDistribution {
    pub fn get(&self, label: Label) -> &[u64] {
        match label {
            Label::Drone => &self.drone,
            Label::NoDrone => &self.no_drone,
        }
    }
}

/// Runs every labelled sample through the network. Unlabelled samples are
/// rejected.
pub fn measure_sops(spec: &NetworkSpec, samples: &[BinnedSample]) -> Result<SopDistribution> {
    let results: Vec<(Label, u64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let label = s
                .label()
                .ok_or_else(|| Error::InvalidConfig(format!("sample {i} has no label")))?;
            Ok((label, snn_forward(spec, s)?.total_sops))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = SopDistribution::default();
    for (label, sops) in results {
        match label {
            Label::Drone => d.drone.push(sops),
            Label::NoDrone => d.no_drone.push(sops),
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speck_examples() {
        let p = SpeckPowerParams::default();
        assert_eq!(speck_power(0.0, &p), 1.48);
        let rate: f64 = 5.65 / 11.53e-6;
        assert!((rate - 4.90e5).abs() < 1e3);
        assert!((speck_power(0.3 / p.k, &p) - 1.78).abs() < 1e-12);
        // affine
        let (a, b) = (1234.0, 98765.0);
        assert!((speck_power(a, &p) + speck_power(b, &p) - p.p_idle - speck_power(a + b, &p)).abs() < 1e-12);
    }

    #[test]
    fn fit_examples() {
        let f = fit_affine(&[(0.0, 1.0), (10.0, 3.0)]).unwrap();
        assert!((f.params.p_idle - 1.0).abs() < 1e-12 && (f.params.k - 0.2).abs() < 1e-12);
        assert!(f.rmse < 1e-12);
        let f = fit_affine(&[(1.0, 2.0), (5.0, 2.0), (9.0, 2.0)]).unwrap();
        assert_eq!(f.params.k, 0.0);
        assert!(matches!(fit_affine(&[(3.0, 1.0), (3.0, 2.0)]), Err(Error::Degenerate(_))));
        assert!(fit_affine(&[(3.0, 1.0)]).is_err());
    }

    #[test]
    fn tx1_examples() {
        let p = Tx1PowerParams::default();
        let d = tx1_dynamic_power(5.62e6, 20.0, &p);
        assert!((d - 0.739).abs() < 5e-4, "{d}");
        assert!((tx1_total_power(5.62e6, 20.0, &p) - 2640.74).abs() < 0.01);
        assert_eq!(tx1_dynamic_power(0.0, 20.0, &p), 0.0);
    }

    #[test]
    fn battery_endpoints() {
        let c = ScenarioConfig::default();
        assert!((battery_life(2640.74, &c) - 14.0).abs() < 0.1);
        let idle = battery_life(1.78, &c) / HOURS_PER_YEAR;
        assert!((idle - 1.28).abs() < 0.01, "{idle}");
        let busy = battery_life(7.13, &c) / HOURS_PER_MONTH;
        assert!((busy - 5.86).abs() < 0.01, "{busy}");
        assert!(battery_life(2.0, &c) > battery_life(3.0, &c));
        let bigger = ScenarioConfig {
            battery_wh: 50.0,
            ..c.clone()
        };
        assert!(battery_life(2.0, &bigger) > battery_life(2.0, &c));
    }

    #[test]
    fn sweep_is_monotone_with_matching_ends() {
        let c = ScenarioConfig::default();
        let p = SpeckPowerParams::default();
        let s = scenario_sweep(&c, &p, 11).unwrap();
        assert!(s.windows(2).all(|w| w[1].hours < w[0].hours));
        assert!((s[0].load_mw - 1.78).abs() < 1e-9);
        assert!((s[10].load_mw - 7.13).abs() < 1e-9);
        assert_eq!(s[0].hours, battery_life(c.speck_load(0.0, &p), &c));
        assert_eq!(s[10].hours, battery_life(c.speck_load(1.0, &p), &c));
    }

    #[test]
    fn summaries() {
        assert_eq!(summarize(&[]), None);
        let s = summarize(&[5, 1, 3, 9]).unwrap();
        assert_eq!((s.min, s.median, s.max), (1, 4.0, 9));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "sop_per_s,power_mw\n0,1.48\n100000,2.633\n").unwrap();
        assert_eq!(read_measurements(&p).unwrap(), vec![(0.0, 1.48), (100000.0, 2.633)]);
        std::fs::write(&p, "rate,power\n0,1\n").unwrap();
        assert!(matches!(read_measurements(&p), Err(Error::Parse { .. })));
        let sweep = dir.path().join("s.csv");
        write_sweep_csv(&sweep, &scenario_sweep(&ScenarioConfig::default(), &SpeckPowerParams::default(), 3).unwrap()).unwrap();
        let text = std::fs::read_to_string(&sweep).unwrap();
        assert!(text.starts_with("drone_fraction,load_mw,hours\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
