#![allow(dead_code)]

use eprsim::spectra::{calibrate_pump, from_db};
use eprsim::{OpoParams, Quadrature, TemporalMode};

pub const HWHM: f64 = 7e6;
pub const ETA: f64 = 0.9;
pub const T_REF: f64 = 0.2e-6;

/// OPO pair whose square-filtered EPR variances at 0.2 µs are −3.30 dB
/// (diff-x) and −3.74 dB (sum-p).
pub fn reference_pair() -> (OpoParams, OpoParams) {
    let mode = TemporalMode::square(T_REF).unwrap();
    let xp = calibrate_pump(from_db(-3.74), ETA, HWHM, &mode).unwrap();
    let xx = calibrate_pump(from_db(-3.30), ETA, HWHM, &mode).unwrap();
    (
        OpoParams::new(xp, HWHM, ETA, Quadrature::P).unwrap(),
        OpoParams::new(xx, HWHM, ETA, Quadrature::X).unwrap(),
    )
}

/// Squeezed-branch spectrum straight from the closed form.
pub fn squeezed_density(x: f64, eta: f64, hwhm: f64, f: f64) -> f64 {
    1.0 - eta * 4.0 * x / ((1.0 + x).powi(2) + (f / hwhm).powi(2))
}

pub fn antisqueezed_density(x: f64, eta: f64, hwhm: f64, f: f64) -> f64 {
    1.0 + eta * 4.0 * x / ((1.0 - x).powi(2) + (f / hwhm).powi(2))
}

/// Mean and standard error of a set of independent estimates.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}
