//! Detection metrics, train/test condition sweeps and output-spike traces.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::events::{bin_events, AggregateFrame, BinnedSample, EventStream, Label};
use crate::snn::{ann_forward, classify_scores, classify_window, snn_forward, NetworkSpec};

/// Counts with drone as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p, l) {
            (Label::Drone, Label::Drone) => c.tp += 1,
            (Label::Drone, Label::NoDrone) => c.fp += 1,
            (Label::NoDrone, Label::Drone) => c.fn_ += 1,
            (Label::NoDrone, Label::NoDrone) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn undefined_if_none<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("undefined"),
    }
}

/// Recall, false discovery rate and F1. `None` marks a 0/0 ratio and is
/// written as `undefined`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(serialize_with = "undefined_if_none")]
    pub recall: Option<f64>,
    #[serde(serialize_with = "undefined_if_none")]
    pub fdr: Option<f64>,
    #[serde(serialize_with = "undefined_if_none")]
    pub f1: Option<f64>,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    Metrics {
        recall: ratio(c.tp, c.tp + c.fn_),
        fdr: ratio(c.fp, c.tp + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

/// Formats a metric for reports.
pub fn format_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

fn labels_of(labels: impl Iterator<Item = Option<Label>>) -> Result<Vec<Label>> {
    labels
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::InvalidConfig(format!("sample {i} has no label"))))
        .collect()
}

/// Spiking-network predictions and their confusion counts.
pub fn evaluate_snn(spec: &NetworkSpec, samples: &[BinnedSample]) -> Result<(Vec<Label>, ConfusionCounts)> {
    let labels = labels_of(samples.iter().map(|s| s.label()))?;
    let preds = samples
        .par_iter()
        .map(|s| Ok(classify_window(&snn_forward(spec, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let c = confusion(&preds, &labels)?;
    Ok((preds, c))
}

/// ReLU-network predictions and their confusion counts.
pub fn evaluate_ann(spec: &NetworkSpec, frames: &[AggregateFrame]) -> Result<(Vec<Label>, ConfusionCounts)> {
    let labels = labels_of(frames.iter().map(|f| f.label()))?;
    let preds = frames
        .par_iter()
        .map(|f| Ok(classify_scores(ann_forward(spec, f)?)))
        .collect::<Result<Vec<_>>>()?;
    let c = confusion(&preds, &labels)?;
    Ok((preds, c))
}

/// F1 of the model trained on condition `i` evaluated on condition `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreMatrix {
    pub conditions: Vec<String>,
    /// Row = training condition, column = test condition.
    pub f1: Vec<Vec<Option<f64>>>,
}

impl ScoreMatrix {
    pub fn get(&self, train: &str, test: &str) -> Option<Option<f64>> {
        let i = self.conditions.iter().position(|c| c == train)?;
        let j = self.conditions.iter().position(|c| c == test)?;
        Some(self.f1[i][j])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["train\\test".to_string()];
        header.extend(self.conditions.iter().cloned());
        w.write_record(&header)?;
        for (c, row) in self.conditions.iter().zip(&self.f1) {
            let mut rec = vec![c.clone()];
            rec.extend(row.iter().map(|v| format_metric(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn score_matrix(
    models: &BTreeMap<String, NetworkSpec>,
    test_sets: &BTreeMap<String, Vec<BinnedSample>>,
) -> Result<ScoreMatrix> {
    let conditions: Vec<String> = models.keys().cloned().collect();
    if let Some(missing) = conditions
        .iter()
        .find(|c| !test_sets.contains_key(*c))
        .or_else(|| test_sets.keys().find(|c| !models.contains_key(*c)))
    {
        return Err(Error::InvalidConfig(format!("missing condition {missing}")));
    }
    let pairs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|i| (0..conditions.len()).map(move |j| (i, j)))
        .collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (_, c) = evaluate_snn(&models[&conditions[i]], &test_sets[&conditions[j]])?;
            Ok(metrics(&c).f1)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = conditions.len();
    Ok(ScoreMatrix {
        f1: scores.chunks(n.max(1)).map(|r| r.to_vec()).collect(),
        conditions,
    })
}

/// Output spikes of one window of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Window start.
    pub t_us: u64,
    pub spikes_drone: u64,
    pub spikes_nodrone: u64,
    pub decision: Label,
}

/// Sliding-window inference over a stream, each window from fresh
/// membranes.
pub fn spike_rate_trace(
    spec: &NetworkSpec,
    stream: &EventStream,
    window_len_us: u64,
    stride_us: u64,
    step_us: u64,
) -> Result<Vec<TracePoint>> {
    if window_len_us == 0 || stride_us == 0 {
        return Err(Error::InvalidConfig("window length and stride must be positive".into()));
    }
    let mut starts = Vec::new();
    let mut t = 0;
    while t + window_len_us <= stream.duration_us() {
        starts.push(t);
        t += stride_us;
    }
    starts
        .par_iter()
        .map(|&t0| {
            let sample = bin_events(stream, t0, window_len_us, step_us)?;
            let tr = snn_forward(spec, &sample)?;
            let [d, n] = tr.totals();
            Ok(TracePoint {
                t_us: t0,
                spikes_drone: d,
                spikes_nodrone: n,
                decision: classify_window(&tr),
            })
        })
        .collect()
}

pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
