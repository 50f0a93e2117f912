//! Checks shared by the integration tests and the acceptance run. Each
//! returns `Ok(detail)` or `Err(detail)`.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripwire::events::{AggregateFrame, BinnedSample, Polarity};
use tripwire::power::{
    battery_life, fit_affine, speck_power, tx1_dynamic_power, tx1_total_power, ScenarioConfig, SpeckPowerParams,
    Tx1PowerParams, HOURS_PER_MONTH, HOURS_PER_YEAR,
};
use tripwire::snn::{
    ann_forward, conv2d, integrate_fire, snn_forward, sum_pool, ConvSpec, LayerSpec, Mode, NetworkSpec, Shape3,
};
use tripwire::synth::{frames_to_events, min_frame_rate, ConverterParams, FrameSequence};

use super::dense;

pub type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn tx1_power() -> Check {
    let p = Tx1PowerParams::default();
    let dynamic = tx1_dynamic_power(5.62e6, 20.0, &p);
    let total = tx1_total_power(5.62e6, 20.0, &p);
    let detail = format!("dynamic {dynamic:.4} mW, total {total:.4} mW");
    ensure((dynamic - 0.74).abs() <= 0.005 && (total - 2640.74).abs() <= 0.01, detail.clone())?;
    Ok(detail)
}

pub fn speck_power_model() -> Check {
    let p = SpeckPowerParams::default();
    ensure(speck_power(0.0, &p) == 1.48, format!("idle {}", speck_power(0.0, &p)))?;
    ensure(p.k == 11.53e-6, format!("slope {}", p.k))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Planted rates span idle to the drone-scenario operating point.
    let cfg = ScenarioConfig::default();
    let top = cfg.sop_drone * cfg.inference_rate_hz;
    let rates: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..top)).collect();
    let clean: Vec<(f64, f64)> = rates.iter().map(|&r| (r, speck_power(r, &p))).collect();
    let fit = fit_affine(&clean).map_err(|e| e.to_string())?;
    let (e0, e1) = ((fit.params.p_idle - p.p_idle).abs() / p.p_idle, (fit.params.k - p.k).abs() / p.k);
    ensure(e0 < 1e-12 && e1 < 1e-12, format!("noise-free fit off by {e0:e}, {e1:e}"))?;
    let normal = rand_distr::Normal::new(0.0, 0.01).unwrap();
    let noisy: Vec<(f64, f64)> = clean
        .iter()
        .map(|&(r, y)| (r, y * (1.0 + rng.sample(normal))))
        .collect();
    let fit = fit_affine(&noisy).map_err(|e| e.to_string())?;
    let (n0, n1) = ((fit.params.p_idle - p.p_idle).abs() / p.p_idle, (fit.params.k - p.k).abs() / p.k);
    ensure(n0 < 0.01 && n1 < 0.01, format!("noisy fit off by {n0:.4}, {n1:.4}"))?;
    Ok(format!("exact fit rel err {:.1e}; 1% noise rel err {n0:.4}/{n1:.4}", e0.max(e1)))
}

pub fn battery_endpoints() -> Check {
    let cfg = ScenarioConfig::default();
    let tx1 = battery_life(2640.74, &cfg);
    let idle_years = battery_life(1.78, &cfg) / HOURS_PER_YEAR;
    let drone_months = battery_life(7.13, &cfg) / HOURS_PER_MONTH;
    let detail = format!("tx1 {tx1:.2} h, speck idle {idle_years:.3} y, speck busy {drone_months:.2} months");
    ensure(
        (tx1 - 14.0).abs() <= 0.02 * 14.0
            && (idle_years - 1.3).abs() <= 0.1 * 1.3
            && (drone_months - 6.0).abs() <= 0.1 * 6.0,
        detail.clone(),
    )?;
    Ok(detail)
}

/// Events per inter-frame interval as signed counts.
fn interval_counts(frames: &[f32], p: &ConverterParams) -> Result<Vec<i64>, String> {
    let seq = FrameSequence::new(1, 1, 1000.0, frames.iter().map(|&v| vec![v]).collect()).map_err(|e| e.to_string())?;
    let s = frames_to_events(&seq, p).map_err(|e| e.to_string())?;
    let mut counts = vec![0i64; frames.len() - 1];
    let mut pol: Vec<Option<Polarity>> = vec![None; frames.len() - 1];
    for e in s.events() {
        let k = (e.t / 1000) as usize;
        if pol[k].is_some_and(|q| q != e.p) {
            return Err(format!("mixed polarity in interval {k}"));
        }
        pol[k] = Some(e.p);
        counts[k] += e.p.sign() as i64;
    }
    Ok(counts)
}

/// One threshold crossing at a time.
fn single_crossing_oracle(frames: &[f32], p: &ConverterParams) -> Vec<i64> {
    let l = |i: f32| (i as f64 + p.log_eps).ln();
    let mut reference = l(frames[0]);
    frames[1..]
        .iter()
        .map(|&i| {
            let v = l(i);
            let mut n = 0;
            while v - reference >= p.threshold {
                reference += p.threshold;
                n += 1;
            }
            while reference - v >= p.threshold {
                reference -= p.threshold;
                n -= 1;
            }
            n
        })
        .collect()
}

pub fn converter_oracle(cases: u32) -> Check {
    let p = ConverterParams::default();
    let c = p.threshold;
    let walk = (0.01f64..1.0, prop::collection::vec(prop_oneof![Just(0.0), -4.0 * c..4.0 * c], 1..40));
    runner(cases)
        .run(&walk, |(i0, steps)| {
            let mut l = i0.ln();
            let mut frames = vec![i0 as f32];
            for d in steps {
                l = (l + d).clamp(-5.0, 0.0);
                frames.push((l.exp() - p.log_eps).max(0.0) as f32);
            }
            let got = interval_counts(&frames, &p).map_err(TestCaseError::fail)?;
            prop_assert_eq!(got, single_crossing_oracle(&frames, &p));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let after = |i0: f64, k: f64| (((i0 + p.log_eps).ln() + k * c).exp() - p.log_eps) as f32;
    let up = interval_counts(&[0.2, after(0.2, 2.5)], &p)?;
    let down = interval_counts(&[0.8, after(0.8, -3.2)], &p)?;
    ensure(up == [2] && down == [-3], format!("2.5C -> {up:?}, -3.2C -> {down:?}"))?;
    Ok(format!("{cases} walks match; 2.5C -> 2, 3.2C -> 3"))
}

pub fn frame_rate_bound() -> Check {
    let f = min_frame_rate(10.0, 150.0).map_err(|e| e.to_string())?;
    ensure((f - 4712.39).abs() <= 0.01, format!("min frame rate {f}"))?;
    let mut scene = tripwire::synth::SceneConfig::default();
    scene.drone.present = true;
    scene.drone.propellers_enabled = true;
    scene.drone.d_prop = 10.0;
    scene.drone.f_prop = 150.0;
    scene.fps = 4000.0;
    ensure(scene.validate().is_err(), "scene below the bound was accepted")?;
    scene.fps = 4800.0;
    scene.validate().map_err(|e| format!("scene above the bound rejected: {e}"))?;
    Ok(format!("min frame rate {f:.2} fps; 4000 fps rejected, 4800 fps accepted"))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn random_counts(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    (0..n)
        .map(|_| if rng.random_bool(0.3) { rng.random_range(1..4) } else { 0 })
        .collect()
}

/// conv2d, sum_pool, ann_forward and snn_forward against the dense
/// oracles on `n` random 8x8 instances each.
pub fn engine_oracles(n: u64) -> Check {
    for seed in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // conv2d: float path within tolerance, dyadic path exact.
        let s = Shape3::new(rng.random_range(1..=3), 8, 8);
        let k = [1, 3, 5][rng.random_range(0..3)];
        let c = ConvSpec::new(s.c, rng.random_range(1..=4), k, 1);
        let x: Vec<f64> = (0..s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..c.weight_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (got, _) = conv2d(
            &x.iter().map(|&v| v as f32).collect::<Vec<_>>(),
            s,
            &c,
            &w.iter().map(|&v| v as f32).collect::<Vec<_>>(),
        )
        .map_err(|e| e.to_string())?;
        let xr: Vec<f64> = x.iter().map(|&v| v as f32 as f64).collect();
        let wr: Vec<f64> = w.iter().map(|&v| v as f32 as f64).collect();
        let (want, _, _) = dense::conv(&xr, s, &c, &wr);
        if let Some(i) = (0..want.len()).find(|&i| !rel_close(got[i] as f64, want[i], 1e-5)) {
            return Err(format!("seed {seed}: conv2d[{i}] {} vs {}", got[i], want[i]));
        }
        let xi: Vec<f64> = random_counts(&mut rng, s.len()).iter().map(|&v| v as f64).collect();
        let wi: Vec<f64> = (0..c.weight_count()).map(|_| rng.random_range(-8..=8) as f64 / 8.0).collect();
        let (got, _) = conv2d(&xi, s, &c, &wi).map_err(|e| e.to_string())?;
        ensure(got == dense::conv(&xi, s, &c, &wi).0, format!("seed {seed}: dyadic conv2d differs"))?;

        let f = [1, 2, 4, 8][rng.random_range(0..4)];
        let (got, gs) = sum_pool(&xi, s, f).map_err(|e| e.to_string())?;
        let (want, ws) = dense::pool(&xi, s, f);
        ensure(got == want && gs == ws, format!("seed {seed}: sum_pool differs"))?;

        let ann = dense::random_network(seed, Mode::Relu, false);
        let counts = random_counts(&mut rng, 64);
        let frame = AggregateFrame::new(8, 8, counts.clone()).map_err(|e| e.to_string())?;
        let got = ann_forward(&ann, &frame).map_err(|e| e.to_string())?;
        let want = dense::ann(&ann, &counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let scale = want[0].abs().max(want[1].abs()).max(1.0);
        for j in 0..2 {
            if (got[j] as f64 - want[j]).abs() > 1e-5 * scale {
                return Err(format!("seed {seed}: ann_forward {got:?} vs {want:?}"));
            }
        }

        let snn = dense::random_network(seed, Mode::Spiking, true);
        let steps: Vec<Vec<(u32, u32)>> = (0..rng.random_range(1..6))
            .map(|_| {
                random_counts(&mut rng, 128)
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(i, c)| (i as u32, c))
                    .collect()
            })
            .collect();
        let sample = BinnedSample::from_step_entries(8, 8, 1000, steps).map_err(|e| e.to_string())?;
        let tr = snn_forward(&snn, &sample).map_err(|e| e.to_string())?;
        let (out, sops) = dense::snn(&snn, &sample);
        ensure(
            tr.output_spikes == out,
            format!("seed {seed}: snn outputs {:?} vs {out:?}", tr.output_spikes),
        )?;
        ensure(
            tr.sops_per_layer == sops,
            format!("seed {seed}: snn sops {:?} vs {sops:?}", tr.sops_per_layer),
        )?;
    }
    Ok(format!("{n} instances each of conv2d, sum_pool, ann_forward, snn_forward"))
}

/// With the floor disabled, an IF neuron fed non-negative drives emits
/// `floor(sum / theta)` spikes. Drives and thresholds are dyadic so the
/// running sums are exact.
pub fn if_conservation(cases: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..cases {
        let theta = [0.25f32, 0.75, 1.0, 1.5, 3.0][rng.random_range(0..5)];
        let len = rng.random_range(1..200);
        let drives: Vec<f32> = (0..len).map(|_| rng.random_range(0..256) as f32 / 64.0).collect();
        let mut v = 0f32;
        let spikes: f32 = drives
            .iter()
            .map(|&d| integrate_fire(&mut v, d, theta, f32::NEG_INFINITY))
            .sum();
        let total: f64 = drives.iter().map(|&d| d as f64).sum();
        let want = (total / theta as f64).floor();
        ensure(
            spikes as f64 == want,
            format!("case {case}: {spikes} spikes, expected {want} (theta {theta})"),
        )?;
    }
    Ok(format!("{cases} sequences conserve spikes"))
}

pub fn sop_examples() -> Check {
    let spec = NetworkSpec {
        input: Shape3::new(2, 8, 8),
        layers: vec![
            LayerSpec::conv(ConvSpec::new(2, 8, 3, 1)),
            LayerSpec::fc(8 * 64, 2),
        ],
        mode: Mode::Spiking,
    };
    let one = |y: usize, x: usize| {
        BinnedSample::from_step_entries(8, 8, 1000, vec![vec![((y * 8 + x) as u32, 1)]]).unwrap()
    };
    let interior = snn_forward(&spec, &one(4, 4)).map_err(|e| e.to_string())?.sops_per_layer[0];
    let corner = snn_forward(&spec, &one(0, 0)).map_err(|e| e.to_string())?.sops_per_layer[0];
    let zero = snn_forward(&spec, &BinnedSample::zeros(3, 8, 8, 1000)).map_err(|e| e.to_string())?.total_sops;
    let detail = format!("interior {interior}, corner {corner}, zero input {zero}");
    ensure(interior == 72 && corner == 32 && zero == 0, detail.clone())?;
    Ok(detail)
}

pub fn loss_formulas() -> Check {
    use tripwire::events::Label;
    use tripwire::train::{batch_grad, sop_loss, total_loss, weight_loss, BpttOptions};
    let s0 = 1e5;
    let l = sop_loss(1.1e5, s0, 10.0 / (s0 * s0));
    ensure(l == 0.1, format!("sop loss {l}"))?;
    let spec = NetworkSpec {
        input: Shape3::new(2, 2, 2),
        layers: vec![
            LayerSpec::fc(8, 3).with_weights(vec![0.5, -2.25, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.125]),
            LayerSpec::fc(3, 2).with_weights(vec![-0.75, 0.5, 0.25, 0.0, 0.0, 0.0]),
        ],
        mode: Mode::Spiking,
    };
    let w = weight_loss(&spec);
    ensure(w == 3.0, format!("weight loss {w}"))?;

    let net = super::toy_network(2);
    let params: Vec<Vec<f64>> = net.params().iter().map(|p| p.iter().map(|&x| x as f64).collect()).collect();
    let samples: Vec<BinnedSample> = (0..4).map(|i| super::random_sample(40 + i, 4, 4, 5, 6)).collect();
    let batch: Vec<(&BinnedSample, Label)> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s, if i % 2 == 0 { Label::Drone } else { Label::NoDrone }))
        .collect();
    let g = batch_grad(&net, &params, &batch, &BpttOptions::default()).map_err(|e| e.to_string())?;
    ensure(
        g.loss == g.mse && g.loss == total_loss(g.mse, 0.0, 0.0),
        format!("total {} vs mse {}", g.loss, g.mse),
    )?;
    Ok(format!("sop loss {l}, weight loss {w}, unregularized total == mse ({})", g.mse))
}
