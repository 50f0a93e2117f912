//! Command-line front end: `gen`, `train`, `eval`, `power` and `convert`.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 missing
//! input, 3 numeric failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::eval::{evaluate_ann, evaluate_snn, metrics, score_matrix, spike_rate_trace, write_trace_csv, ConfusionCounts, Metrics};
use crate::events::{read_events, write_events, BinnedSample};
use crate::power::{
    battery_life, fit_affine, measure_sops, read_measurements, scenario_sweep, speck_power, summarize,
    tx1_dynamic_power, tx1_total_power, write_sweep_csv, ScenarioConfig, SpeckPowerParams, Tx1PowerParams,
    HOURS_PER_MONTH, HOURS_PER_YEAR,
};
use crate::snn::{count_flops, load_model, save_model, Mode, NetworkSpec};
use crate::synth::{
    frames_to_events, generate_dataset, simulate_scene, ConverterParams, Dataset, DatasetOptions, DeskRecipe,
    FrameSequence, SceneConfig,
};
use crate::train::{initial_network, train_ann, train_snn, write_history_csv, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "tripwire", version, about = "Event-camera drone detection with spiking networks")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only print errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate scenes and write a labelled dataset.
    Gen(GenArgs),
    /// Train a spiking or ReLU network on a dataset.
    Train(TrainArgs),
    /// Evaluate models: metrics per scale, score matrix, spike traces.
    Eval(EvalArgs),
    /// Power and battery report.
    Power(PowerArgs),
    /// Convert PNG frames or a scene description into an event CSV.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON with `recipe` or `scenes`, and optional `dataset` options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Render drones without propellers.
    #[arg(long)]
    pub no_propellers: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Snn,
    Ann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub seed: u64,
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "snn")]
    pub mode: ModeArg,
    /// Synaptic-operation and weight regularization (spiking mode only).
    #[arg(long, value_enum)]
    pub regularize: Option<Switch>,
    /// Target synaptic operations per sample for the regularizer.
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// TrainConfig JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON, or `CONDITION=PATH` (repeatable) for a score matrix.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    /// Dataset directory; metrics are reported per drone scale.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Event CSV to trace with the (first) model.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 50_000)]
    pub window_us: u64,
    /// Defaults to the window length.
    #[arg(long)]
    pub stride_us: Option<u64>,
    #[arg(long, default_value_t = 1_000)]
    pub step_us: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Spiking model for measured SOPs (needs --data).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub sop_drone: Option<f64>,
    #[arg(long)]
    pub sop_nodrone: Option<f64>,
    /// FLOPs per ANN inference.
    #[arg(long)]
    pub n_flop: Option<f64>,
    /// Count FLOPs of this ReLU model instead of --n-flop.
    #[arg(long)]
    pub ann_model: Option<PathBuf>,
    /// `sop_per_s,power_mw` CSV to fit the chip model to.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    /// ScenarioConfig JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Directory of PNG frames (sorted by name) or a scene JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output event CSV; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Frame rate of a PNG sequence.
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub refractory_us: u64,
}

/// Input of `gen --config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub recipe: Option<DeskRecipe>,
    pub scenes: Option<Vec<SceneConfig>>,
    pub dataset: DatasetOptions,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingInput(_) => 2,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
        Error::NonFinite(_) | Error::Diverged { .. } => 3,
        _ => 1,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, quiet),
        Command::Train(a) => cmd_train(&a, quiet),
        Command::Eval(a) => cmd_eval(&a, quiet),
        Command::Power(a) => cmd_power(&a, quiet),
        Command::Convert(a) => cmd_convert(&a, quiet),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Mixes the run seed into a per-scene seed.
fn mix_seed(run: u64, scene: u64) -> u64 {
    let mut z = run ^ scene.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn cmd_gen(a: &GenArgs, quiet: bool) -> Result<()> {
    let cfg: GenConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => GenConfig::default(),
    };
    let mut scenes = match (&cfg.recipe, &cfg.scenes) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig("give either `recipe` or `scenes`, not both".into()))
        }
        (_, Some(s)) => s
            .iter()
            .map(|c| SceneConfig {
                seed: mix_seed(a.seed, c.seed),
                ..c.clone()
            })
            .collect(),
        (r, None) => {
            let mut recipe = r.clone().unwrap_or_default();
            recipe.seed = a.seed;
            recipe.scenes()
        }
    };
    if a.no_propellers {
        for s in &mut scenes {
            s.drone.propellers_enabled = false;
        }
    }
    let data = generate_dataset(&scenes, &cfg.dataset)?;
    data.write(&a.out)?;
    if !quiet {
        println!(
            "{} scenes, {} samples ({} drone) -> {}",
            data.scenes.len(),
            data.len(),
            data.count(crate::events::Label::Drone),
            a.out.display()
        );
    }
    Ok(())
}

pub fn cmd_train(a: &TrainArgs, quiet: bool) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    config.seed = a.seed;
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    let mode = match a.mode {
        ModeArg::Snn => Mode::Spiking,
        ModeArg::Ann => Mode::Relu,
    };
    if mode == Mode::Relu && (a.regularize.is_some() || a.s0.is_some()) {
        return Err(Error::InvalidConfig(
            "the ANN is trained without regularization; drop --regularize/--s0".into(),
        ));
    }
    match a.regularize {
        Some(Switch::On) => config.regularization.enabled = true,
        Some(Switch::Off) => config.regularization.enabled = false,
        None => {}
    }
    if let Some(s0) = a.s0 {
        config.regularization.s0 = s0;
    }
    config.validate()?;
    let data = Dataset::load(&a.data)?;
    let (h, w) = (data.manifest.height as usize, data.manifest.width as usize);
    let spec = initial_network(mode, h, w, &config);
    fs::create_dir_all(&a.out)?;
    let outcome = match mode {
        Mode::Spiking => train_snn(&data.samples, &spec, &config)?,
        Mode::Relu => train_ann(&data.frames, &spec, &config)?,
    };
    save_model(&outcome.spec, &a.out.join("model.json"))?;
    write_history_csv(&a.out.join("history.csv"), &outcome.history)?;
    write_json(&a.out.join("train_config.json"), &config)?;
    write_json(
        &a.out.join("split.json"),
        &json!({"train": outcome.split.train, "validation": outcome.split.validation}),
    )?;
    if !quiet {
        for r in &outcome.history {
            match r.mean_sops {
                Some(s) => println!("epoch {:3}  loss {:.5}  val_acc {:.3}  mean_sops {:.0}", r.epoch, r.loss, r.val_acc, s),
                None => println!("epoch {:3}  loss {:.5}  val_acc {:.3}", r.epoch, r.loss, r.val_acc),
            }
        }
        println!("best epoch {} -> {}", outcome.best_epoch, a.out.join("model.json").display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ConditionReport {
    condition: String,
    samples: usize,
    counts: ConfusionCounts,
    metrics: Metrics,
}

fn scale_key(scale: f64) -> String {
    format!("{scale}")
}

/// Samples grouped by drone scale.
fn by_condition(data: &Dataset) -> BTreeMap<String, Vec<usize>> {
    let mut m: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in data.manifest.samples.iter().enumerate() {
        m.entry(scale_key(r.scale_px)).or_default().push(i);
    }
    m
}

pub fn cmd_eval(a: &EvalArgs, quiet: bool) -> Result<()> {
    let mut models: Vec<(Option<String>, NetworkSpec)> = Vec::new();
    for m in &a.model {
        let (cond, path) = match m.split_once('=') {
            Some((c, p)) => (Some(c.to_string()), PathBuf::from(p)),
            None => (None, PathBuf::from(m)),
        };
        models.push((cond, load_model(&path)?));
    }
    fs::create_dir_all(&a.out)?;
    let (_, first) = &models[0];
    if let Some(data_dir) = &a.data {
        let data = Dataset::load(data_dir)?;
        let groups = by_condition(&data);
        let mut reports = Vec::new();
        for (cond, idx) in std::iter::once(("all".to_string(), (0..data.len()).collect::<Vec<_>>())).chain(groups.clone()) {
            let counts = match first.mode {
                Mode::Spiking => {
                    let s: Vec<BinnedSample> = idx.iter().map(|&i| data.samples[i].clone()).collect();
                    evaluate_snn(first, &s)?.1
                }
                Mode::Relu => {
                    let f: Vec<_> = idx.iter().map(|&i| data.frames[i].clone()).collect();
                    evaluate_ann(first, &f)?.1
                }
            };
            reports.push(ConditionReport {
                condition: cond,
                samples: idx.len(),
                counts,
                metrics: metrics(&counts),
            });
        }
        write_json(&a.out.join("metrics.json"), &reports)?;
        let mut w = csv::Writer::from_path(a.out.join("metrics.csv"))?;
        w.write_record(["condition", "samples", "tp", "fp", "fn", "tn", "recall", "fdr", "f1"])?;
        for r in &reports {
            let c = r.counts;
            w.write_record([
                r.condition.clone(),
                r.samples.to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tn.to_string(),
                crate::eval::format_metric(r.metrics.recall),
                crate::eval::format_metric(r.metrics.fdr),
                crate::eval::format_metric(r.metrics.f1),
            ])?;
        }
        w.flush()?;
        if !quiet {
            for r in &reports {
                println!(
                    "{:>6}  n={:4}  recall {}  fdr {}  f1 {}",
                    r.condition,
                    r.samples,
                    crate::eval::format_metric(r.metrics.recall),
                    crate::eval::format_metric(r.metrics.fdr),
                    crate::eval::format_metric(r.metrics.f1)
                );
            }
        }
        let conditioned: BTreeMap<String, NetworkSpec> = models
            .iter()
            .filter_map(|(c, m)| c.clone().map(|c| (c, m.clone())))
            .collect();
        if conditioned.len() > 1 {
            let tests: BTreeMap<String, Vec<BinnedSample>> = groups
                .iter()
                .filter(|(c, _)| conditioned.contains_key(*c))
                .map(|(c, idx)| (c.clone(), idx.iter().map(|&i| data.samples[i].clone()).collect()))
                .collect();
            let matrix = score_matrix(&conditioned, &tests)?;
            matrix.write_csv(&a.out.join("matrix.csv"))?;
            if !quiet {
                println!("score matrix -> {}", a.out.join("matrix.csv").display());
            }
        }
    }
    if let Some(trace_path) = &a.trace {
        let stream = read_events(trace_path)?;
        let stride = a.stride_us.unwrap_or(a.window_us);
        let trace = spike_rate_trace(first, &stream, a.window_us, stride, a.step_us)?;
        write_trace_csv(&a.out.join("trace.csv"), &trace)?;
        if !quiet {
            println!("{} trace windows -> {}", trace.len(), a.out.join("trace.csv").display());
        }
    }
    if a.data.is_none() && a.trace.is_none() {
        return Err(Error::InvalidConfig("nothing to evaluate: give --data and/or --trace".into()));
    }
    Ok(())
}

pub fn cmd_power(a: &PowerArgs, quiet: bool) -> Result<()> {
    let mut scenario: ScenarioConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ScenarioConfig::default(),
    };
    let speck = match &a.measurements {
        Some(p) => fit_affine(&read_measurements(p)?)?.params,
        None => SpeckPowerParams::default(),
    };
    let mut measured = None;
    match (&a.model, &a.data) {
        (Some(m), Some(d)) => {
            let spec = load_model(m)?;
            let data = Dataset::load(d)?;
            let dist = measure_sops(&spec, &data.samples)?;
            let (sd, sn) = (summarize(&dist.drone), summarize(&dist.no_drone));
            if let Some(s) = sd {
                scenario.sop_drone = s.median;
            }
            if let Some(s) = sn {
                scenario.sop_nodrone = s.median;
            }
            measured = Some(json!({"drone": sd, "no_drone": sn}));
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(Error::InvalidConfig("--model and --data go together".into()))
        }
        (None, None) => {}
    }
    if let Some(v) = a.sop_drone {
        scenario.sop_drone = v;
    }
    if let Some(v) = a.sop_nodrone {
        scenario.sop_nodrone = v;
    }
    scenario.validate()?;
    let n_flop = match (&a.ann_model, a.n_flop) {
        (Some(p), _) => count_flops(&load_model(p)?)? as f64,
        (None, Some(v)) => v,
        (None, None) => 5.62e6,
    };
    let tx1 = Tx1PowerParams::default();
    let rate = scenario.inference_rate_hz;
    let idle_load = scenario.speck_load(0.0, &speck);
    let busy_load = scenario.speck_load(1.0, &speck);
    let tx1_total = tx1_total_power(n_flop, rate, &tx1);
    let sweep = scenario_sweep(&scenario, &speck, a.points)?;
    fs::create_dir_all(&a.out)?;
    write_sweep_csv(&a.out.join("sweep.csv"), &sweep)?;
    let report = json!({
        "speck": {
            "p_idle_mw": speck.p_idle,
            "k_mw_per_sop_s": speck.k,
            "idle_mw": speck_power(0.0, &speck),
            "no_drone": {"sops_per_sample": scenario.sop_nodrone, "dynamic_mw": idle_load - speck.p_idle, "total_mw": idle_load},
            "drone": {"sops_per_sample": scenario.sop_drone, "dynamic_mw": busy_load - speck.p_idle, "total_mw": busy_load},
        },
        "tx1": {
            "n_flop": n_flop,
            "rate_hz": rate,
            "dynamic_mw": tx1_dynamic_power(n_flop, rate, &tx1),
            "total_mw": tx1_total,
        },
        "battery": {
            "self_discharge_mw": scenario.self_discharge_mw(),
            "tx1_hours": battery_life(tx1_total, &scenario),
            "speck_no_drone_hours": battery_life(idle_load, &scenario),
            "speck_no_drone_years": battery_life(idle_load, &scenario) / HOURS_PER_YEAR,
            "speck_drone_hours": battery_life(busy_load, &scenario),
            "speck_drone_months": battery_life(busy_load, &scenario) / HOURS_PER_MONTH,
        },
        "measured_sops": measured,
    });
    write_json(&a.out.join("report.json"), &report)?;
    if !quiet {
        println!("speck idle {:.2} mW, no drone {:.2} mW, drone {:.2} mW", speck.p_idle, idle_load, busy_load);
        println!("tx1 dynamic {:.3} mW, total {:.2} mW", tx1_dynamic_power(n_flop, rate, &tx1), tx1_total);
        println!(
            "battery: tx1 {:.1} h, speck {:.2} years (no drone) to {:.1} months (drone)",
            battery_life(tx1_total, &scenario),
            battery_life(idle_load, &scenario) / HOURS_PER_YEAR,
            battery_life(busy_load, &scenario) / HOURS_PER_MONTH
        );
    }
    Ok(())
}

fn png_frames(dir: &Path) -> Result<(usize, usize, Vec<Vec<f32>>)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "{} holds {} PNG frames, need at least 2",
            dir.display(),
            paths.len()
        )));
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut size = None;
    for p in &paths {
        let img = image::open(p)?.to_luma8();
        let dims = (img.width() as usize, img.height() as usize);
        if *size.get_or_insert(dims) != dims {
            return Err(Error::Shape(format!("{} is {}x{}, expected {}x{}", p.display(), dims.0, dims.1, size.unwrap().0, size.unwrap().1)));
        }
        frames.push(img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect());
    }
    let (w, h) = size.unwrap();
    Ok((w, h, frames))
}

pub fn cmd_convert(a: &ConvertArgs, quiet: bool) -> Result<()> {
    if !a.input.exists() {
        return Err(Error::MissingInput(a.input.clone()));
    }
    let params = ConverterParams {
        threshold: a.threshold,
        refractory_us: a.refractory_us,
        ..Default::default()
    };
    params.validate()?;
    let stream = if a.input.is_dir() {
        let fps = a
            .fps
            .ok_or_else(|| Error::InvalidConfig("--fps is required for a PNG sequence".into()))?;
        let (w, h, frames) = png_frames(&a.input)?;
        frames_to_events(&FrameSequence::new(w, h, fps, frames)?, &params)?
    } else {
        let scene: SceneConfig = read_json(&a.input)?;
        simulate_scene(&scene, &params)?.stream
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_events(&stream, &a.out)?;
    if !quiet {
        println!("{} events -> {}", stream.len(), a.out.display());
    }
    Ok(())
}
