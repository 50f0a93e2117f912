use crate::error::{Error, Result};

/// Adam optimizer state with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
    pub step: u64,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl AdamState {
    pub fn new(params: &[Vec<f32>]) -> Self {
        let zeros: Vec<Vec<f32>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub fn adam_step(
    params: &mut [Vec<f32>],
    grads: &[Vec<f32>],
    state: &mut AdamState,
    lr: f32,
) -> Result<()> {
    let shapes_ok = params.len() == grads.len()
        && params.len() == state.m.len()
        && params
            .iter()
            .zip(grads)
            .zip(&state.m)
            .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_ok {
        return Err(Error::Shape("parameter, gradient and moment shapes differ".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] -= lr * mh / (vh.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![vec![0.0f32; 3]];
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &[vec![1.0, -2.0, 0.5]], &mut st, 1e-3).unwrap();
        assert!((p[0][0] + 1e-3).abs() < 1e-8);
        assert!((p[0][1] - 1e-3).abs() < 1e-8);
        assert!(p[0][2] < 0.0);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = vec![vec![0.25f32, -1.0]];
        let mut st = AdamState::new(&p);
        for _ in 0..10 {
            adam_step(&mut p, &[vec![0.0, 0.0]], &mut st, 0.1).unwrap();
        }
        assert_eq!(p, vec![vec![0.25, -1.0]]);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![vec![0.0f32; 2]];
        let mut st = AdamState::new(&p);
        assert!(adam_step(&mut p, &[vec![0.0]], &mut st, 0.1).is_err());
    }
}
