//! Periodic exponential pseudo-derivative of the multi-spike function and
//! its integral, used as a smooth stand-in for the floor in soft mode.

use crate::snn::Real;

/// Nearest positive multiple index of `v / theta`, at least 1.
#[inline]
fn peak<F: Real>(v: F, theta: F) -> F {
    (v / theta).round().max(F::one())
}

/// `exp(-beta * d / theta)` where `d` is the distance from `v` to the
/// nearest positive multiple of `theta`; zero for `v <= theta / 2`.
#[inline]
pub fn surrogate_grad<F: Real>(v: F, theta: F, beta: F) -> F {
    let half = theta / (F::one() + F::one());
    if v <= half {
        return F::zero();
    }
    let d = (v - peak(v, theta) * theta).abs();
    (-beta * d / theta).exp()
}

/// Integral of [`surrogate_grad`] from `theta / 2` to `v`: a smooth,
/// increasing relaxation of the spike count whose derivative is exactly
/// the surrogate.
pub fn soft_spike<F: Real>(v: F, theta: F, beta: F) -> F {
    let two = F::one() + F::one();
    let half = theta / two;
    if v <= half {
        return F::zero();
    }
    let scale = theta / beta;
    let tail = (-beta / two).exp();
    let area = two * scale * (F::one() - tail);
    let k = peak(v, theta);
    let x = v - k * theta;
    let before = (k - F::one()) * area;
    if x <= F::zero() {
        before + scale * ((beta * x / theta).exp() - tail)
    } else {
        before + area / two + scale * (F::one() - (-beta * x / theta).exp())
    }
}
