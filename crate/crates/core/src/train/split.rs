use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::events::Label;

pub const MIN_SPLIT_SAMPLES: usize = 20;
pub const VALIDATION_FRACTION: f64 = 0.05;

/// Sample indices of a train/validation split, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// 95/5 split stratified by label. The validation size is `round(0.05 n)`,
/// shared between labels by largest remainder (drone first on ties).
pub fn split_dataset(labels: &[Label], seed: u64) -> Result<Split> {
    let n = labels.len();
    if n < MIN_SPLIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SPLIT_SAMPLES,
            got: n,
        });
    }
    let mut groups: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        groups[l.index()].push(i);
    }
    let total_val = ((n as f64 * VALIDATION_FRACTION).round() as usize).max(1);
    let exact: Vec<f64> = groups
        .iter()
        .map(|g| g.len() as f64 * total_val as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total_val - quota.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().cycle().take(4) {
        if left == 0 {
            break;
        }
        if quota[g] < groups[g].len() {
            quota[g] += 1;
            left -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::with_capacity(n),
        validation: Vec::with_capacity(total_val),
    };
    for (g, idx) in groups.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        split.validation.extend_from_slice(&idx[..quota[g]]);
        split.train.extend_from_slice(&idx[quota[g]..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    Ok(split)
}
