//! Training loops shared by the spiking and ReLU networks.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{AggregateFrame, BinnedSample, Label};
use crate::snn::{ann_forward, classify_scores, classify_window, snn_forward, Mode, NetworkSpec};

use super::adam::{adam_step, AdamState};
use super::ann::ann_batch_grad;
use super::bptt::{batch_grad, BpttOptions};
use super::split::{split_dataset, Split};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Regularization {
    pub enabled: bool,
    /// Target synaptic operations per sample.
    pub s0: f64,
    /// Defaults to `10 / s0^2`.
    pub alpha: Option<f64>,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            enabled: false,
            s0: 0.0,
            alpha: None,
        }
    }
}

impl Regularization {
    pub fn on(s0: f64) -> Self {
        Self {
            enabled: true,
            s0,
            alpha: None,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(10.0 / (self.s0 * self.s0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpikes {
    pub correct: f64,
    pub incorrect: f64,
}

impl Default for TargetSpikes {
    fn default() -> Self {
        Self {
            correct: 1.0,
            incorrect: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub regularization: Regularization,
    pub surrogate_beta: f64,
    pub target_spikes: TargetSpikes,
    /// Scale on the fan-in normal initialisation used by [`initial_network`].
    pub init_gain: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 0,
            regularization: Regularization::default(),
            surrogate_beta: 10.0,
            target_spikes: TargetSpikes::default(),
            init_gain: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be non-negative",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.surrogate_beta > 0.0) {
            return Err(Error::InvalidConfig("surrogate beta must be positive".into()));
        }
        let r = &self.regularization;
        if r.enabled && !(r.s0 > 0.0 && r.s0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "regularization target S0 = {} must be positive",
                r.s0
            )));
        }
        if r.enabled && !(r.alpha() >= 0.0 && r.alpha().is_finite()) {
            return Err(Error::InvalidConfig("regularization alpha must be finite".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn bptt_options(&self) -> BpttOptions {
        let r = &self.regularization;
        BpttOptions {
            soft: false,
            beta: self.surrogate_beta,
            targets: (self.target_spikes.correct, self.target_spikes.incorrect),
            sop: r.enabled.then(|| (r.s0, r.alpha())),
            weight_penalty: r.enabled,
        }
    }
}

/// Default architecture at the given geometry with seeded initial weights.
pub fn initial_network(mode: Mode, height: usize, width: usize, config: &TrainConfig) -> NetworkSpec {
    NetworkSpec::default_architecture(mode, height, width).kaiming_init(config.seed, config.init_gain)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    pub val_acc: f64,
    /// Mean synaptic operations per validation sample; empty for the ANN.
    pub mean_sops: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Weights of the epoch with the best validation accuracy.
    pub spec: NetworkSpec,
    pub history: Vec<EpochRecord>,
    /// 0 when no epoch was run.
    pub best_epoch: usize,
    pub split: Split,
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn labels_of<T>(items: &[T], label: impl Fn(&T) -> Option<Label>) -> Result<Vec<Label>> {
    items
        .iter()
        .enumerate()
        .map(|(i, x)| {
            label(x).ok_or_else(|| Error::InvalidConfig(format!("sample {i} has no label")))
        })
        .collect()
}

struct Evaluation {
    accuracy: f64,
    mean_sops: Option<f64>,
}

fn fit(
    spec: &NetworkSpec,
    config: &TrainConfig,
    labels: &[Label],
    step: &(dyn Fn(&[Vec<f32>], &[usize]) -> Result<(f64, Vec<Vec<f32>>)> + Sync),
    evaluate: &(dyn Fn(&NetworkSpec, &[usize]) -> Result<Evaluation> + Sync),
) -> Result<TrainOutcome> {
    config.validate()?;
    let split = split_dataset(labels, config.seed)?;
    let mut params = spec.params();
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x0074_7261_696e);
    let mut order = split.train.clone();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = (spec.clone(), f64::NEG_INFINITY, 0usize);
    let mut current = spec.clone();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, grads) = step(&params, batch)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut adam, config.learning_rate as f32)?;
        }
        if params.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        current.set_params(&params);
        let ev = evaluate(&current, &split.validation)?;
        history.push(EpochRecord {
            epoch,
            loss: loss_sum / order.len().max(1) as f64,
            val_acc: ev.accuracy,
            mean_sops: ev.mean_sops,
        });
        if ev.accuracy >= best.1 {
            best = (current.clone(), ev.accuracy, epoch);
        }
    }
    Ok(TrainOutcome {
        spec: best.0,
        history,
        best_epoch: best.2,
        split,
    })
}

/// Trains a spiking network with BPTT and Adam on labelled samples.
pub fn train_snn(
    samples: &[BinnedSample],
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if spec.mode != Mode::Spiking {
        return Err(Error::InvalidConfig("train_snn needs a spiking network".into()));
    }
    spec.check()?;
    let labels = labels_of(samples, |s| s.label())?;
    let opts = config.bptt_options();
    let step = |params: &[Vec<f32>], idx: &[usize]| {
        let batch: Vec<(&BinnedSample, Label)> = idx.iter().map(|&i| (&samples[i], labels[i])).collect();
        let b = batch_grad(spec, params, &batch, &opts)?;
        Ok((b.loss as f64, b.grads))
    };
    let evaluate = |net: &NetworkSpec, idx: &[usize]| {
        let results: Vec<(bool, u64)> = idx
            .par_iter()
            .map(|&i| {
                let tr = snn_forward(net, &samples[i])?;
                Ok((classify_window(&tr) == labels[i], tr.total_sops))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = results.len().max(1) as f64;
        Ok(Evaluation {
            accuracy: results.iter().filter(|r| r.0).count() as f64 / n,
            mean_sops: Some(results.iter().map(|r| r.1 as f64).sum::<f64>() / n),
        })
    };
    fit(spec, config, &labels, &step, &evaluate)
}

/// Trains the ReLU network with softmax cross-entropy and no regularization.
pub fn train_ann(
    frames: &[AggregateFrame],
    spec: &NetworkSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if spec.mode != Mode::Relu {
        return Err(Error::InvalidConfig("train_ann needs a relu network".into()));
    }
    if config.regularization.enabled {
        return Err(Error::InvalidConfig("the ANN is trained without regularization".into()));
    }
    spec.check()?;
    let labels = labels_of(frames, |f| f.label())?;
    let step = |params: &[Vec<f32>], idx: &[usize]| {
        let batch: Vec<(&AggregateFrame, Label)> = idx.iter().map(|&i| (&frames[i], labels[i])).collect();
        let (loss, grads) = ann_batch_grad(spec, params, &batch)?;
        Ok((loss as f64, grads))
    };
    let evaluate = |net: &NetworkSpec, idx: &[usize]| {
        let hits: Vec<bool> = idx
            .par_iter()
            .map(|&i| Ok(classify_scores(ann_forward(net, &frames[i])?) == labels[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluation {
            accuracy: hits.iter().filter(|&&h| h).count() as f64 / hits.len().max(1) as f64,
            mean_sops: None,
        })
    };
    fit(spec, config, &labels, &step, &evaluate)
}
