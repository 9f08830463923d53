//! Temporal mode functions.
//!
//! A mode `f(t)` is a real, unit-norm weight (`∫ f(t)² dt = 1`) on finite
//! support starting at `t = 0`. The filtered quadrature of a beam is
//! `x^f = ∫ f(t) x(t) dt`, realized on sampled data as `√Δt · Σ f(t_i) x_i`.
//! The spectral weight `|F(Ω)|²` (Fourier transform of `f`, frequency in Hz)
//! integrates to one over all frequencies.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-norm tolerance for tabulated modes.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalMode {
    /// `f(t) = 1/√T` on `[0, T)`.
    Square { duration: f64 },
    /// `f(t) ∝ exp(-rate·t)` on `[0, T)`.
    OneSidedExp { rate: f64, duration: f64 },
    /// `f(t) ∝ exp(-rate·|t - T/2|)` on `[0, T)`.
    DoubleExp { rate: f64, duration: f64 },
    /// Piecewise-constant samples, `f(t) = samples[⌊t/dt⌋]`.
    Tabulated { dt: f64, samples: Vec<f64> },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

/// sin(x)/x with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl TemporalMode {
    pub fn square(duration: f64) -> Result<Self> {
        positive("duration", duration)?;
        Ok(TemporalMode::Square { duration })
    }

    pub fn one_sided_exp(rate: f64, duration: f64) -> Result<Self> {
        positive("rate", rate)?;
        positive("duration", duration)?;
        Ok(TemporalMode::OneSidedExp { rate, duration })
    }

    pub fn double_exp(rate: f64, duration: f64) -> Result<Self> {
        positive("rate", rate)?;
        positive("duration", duration)?;
        Ok(TemporalMode::DoubleExp { rate, duration })
    }

    /// Builds a tabulated mode, rescaling `samples` to unit norm.
    pub fn tabulated(dt: f64, samples: Vec<f64>) -> Result<Self> {
        positive("dt", dt)?;
        if samples.is_empty() {
            return Err(Error::param("samples", "empty mode table"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("samples", "non-finite entry"));
        }
        let norm_sq: f64 = samples.iter().map(|s| s * s).sum::<f64>() * dt;
        if norm_sq <= 0.0 {
            return Err(Error::NotNormalized(norm_sq));
        }
        let scale = norm_sq.sqrt().recip();
        Ok(TemporalMode::Tabulated {
            dt,
            samples: samples.into_iter().map(|s| s * scale).collect(),
        })
    }

    /// Checks parameters of a mode that may have been built field-by-field
    /// (e.g. deserialized).
    pub fn validate(&self) -> Result<()> {
        match self {
            TemporalMode::Square { duration } => positive("duration", *duration),
            TemporalMode::OneSidedExp { rate, duration } | TemporalMode::DoubleExp { rate, duration } => {
                positive("rate", *rate)?;
                positive("duration", *duration)
            }
            TemporalMode::Tabulated { dt, samples } => {
                positive("dt", *dt)?;
                if samples.is_empty() {
                    return Err(Error::param("samples", "empty mode table"));
                }
                let n = self.norm_sq();
                if (n - 1.0).abs() > NORM_TOLERANCE {
                    return Err(Error::NotNormalized(n));
                }
                Ok(())
            }
        }
    }

    /// Support length in seconds.
    pub fn duration(&self) -> f64 {
        match self {
            TemporalMode::Square { duration }
            | TemporalMode::OneSidedExp { duration, .. }
            | TemporalMode::DoubleExp { duration, .. } => *duration,
            TemporalMode::Tabulated { dt, samples } => dt * samples.len() as f64,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TemporalMode::Square { .. } => "square",
            TemporalMode::OneSidedExp { .. } => "one_sided_exp",
            TemporalMode::DoubleExp { .. } => "double_exp",
            TemporalMode::Tabulated { .. } => "tabulated",
        }
    }

    /// `∫ f(t)² dt`; exactly one for the analytic families.
    pub fn norm_sq(&self) -> f64 {
        match self {
            TemporalMode::Tabulated { dt, samples } => samples.iter().map(|s| s * s).sum::<f64>() * dt,
            _ => 1.0,
        }
    }

    fn exp_norm_sq(rate: f64, support: f64) -> f64 {
        // 1 / ∫_0^support exp(-2·rate·t) dt
        2.0 * rate / (-(-2.0 * rate * support).exp_m1())
    }

    /// Mode amplitude at time `t` (zero outside the support).
    pub fn value(&self, t: f64) -> f64 {
        let d = self.duration();
        if !(0.0..d).contains(&t) {
            return 0.0;
        }
        match self {
            TemporalMode::Square { duration } => duration.sqrt().recip(),
            TemporalMode::OneSidedExp { rate, duration } => {
                Self::exp_norm_sq(*rate, *duration).sqrt() * (-rate * t).exp()
            }
            TemporalMode::DoubleExp { rate, duration } => {
                let half = 0.5 * duration;
                // two one-sided halves of length T/2 each
                let n_sq = 0.5 * Self::exp_norm_sq(*rate, half);
                n_sq.sqrt() * (-rate * (t - half).abs()).exp()
            }
            TemporalMode::Tabulated { dt, samples } => {
                let i = ((t / dt) as usize).min(samples.len() - 1);
                samples[i]
            }
        }
    }

    /// `|F(2πf)|²` for frequency `f` in Hz (units of seconds).
    pub fn spectral_weight(&self, f: f64) -> f64 {
        let omega = 2.0 * PI * f;
        match self {
            TemporalMode::Square { duration } => {
                let s = sinc(0.5 * omega * duration);
                duration * s * s
            }
            TemporalMode::OneSidedExp { rate, duration } => {
                // |∫_0^T e^{-(Γ+iω)t} dt|² = ((1-e^{-a})² + 4e^{-a} sin²(b/2)) / (Γ² + ω²)
                let a = rate * duration;
                let b = omega * duration;
                let u = (-a).exp_m1();
                let s = (0.5 * b).sin();
                let num = u * u + 4.0 * (-a).exp() * s * s;
                let den = rate * rate + omega * omega;
                Self::exp_norm_sq(*rate, *duration) * num / den
            }
            TemporalMode::DoubleExp { rate, duration } => {
                // F = 2N ∫_0^{T/2} e^{-Γu} cos(ωu) du (up to a phase)
                let h = 0.5 * duration;
                let decay = (-rate * h).exp();
                let s = (0.5 * omega * h).sin();
                let re = (rate * (-(-rate * h).exp_m1() + 2.0 * decay * s * s) + omega * decay * (omega * h).sin())
                    / (rate * rate + omega * omega);
                let n_sq = 0.5 * Self::exp_norm_sq(*rate, h);
                4.0 * n_sq * re * re
            }
            TemporalMode::Tabulated { dt, samples } => {
                let step = Complex64::from_polar(1.0, -omega * dt);
                let mut phase = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for &s in samples {
                    acc += phase * s;
                    phase *= step;
                }
                let hold = sinc(0.5 * omega * dt);
                dt * dt * hold * hold * acc.norm_sqr()
            }
        }
    }

    /// Sample weights on a grid of spacing `dt`, renormalized so that
    /// `Σ w_i² dt = 1`. The window length is `round(duration/dt)` samples,
    /// sampled at bin midpoints.
    pub fn discretize(&self, dt: f64) -> Result<Vec<f64>> {
        positive("dt", dt)?;
        let n = (self.duration() / dt).round() as usize;
        if n == 0 {
            return Err(Error::param(
                "mode",
                format!(
                    "duration {:e} s is shorter than half a sample ({:e} s)",
                    self.duration(),
                    dt
                ),
            ));
        }
        // Stretch midpoints over the rounded window so short odd-length modes
        // keep their shape.
        let scale = self.duration() / (n as f64 * dt);
        let mut w: Vec<f64> = (0..n).map(|i| self.value((i as f64 + 0.5) * dt * scale)).collect();
        let norm_sq: f64 = w.iter().map(|x| x * x).sum::<f64>() * dt;
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::NotNormalized(norm_sq));
        }
        let k = norm_sq.sqrt().recip();
        w.iter_mut().for_each(|x| *x *= k);
        Ok(w)
    }

    /// A tabulated mode delayed by `samples` leading zeros.
    pub fn delayed(&self, samples: usize) -> Result<Self> {
        match self {
            TemporalMode::Tabulated { dt, samples: s } => {
                let mut out = vec![0.0; samples];
                out.extend_from_slice(s);
                Ok(TemporalMode::Tabulated { dt: *dt, samples: out })
            }
            _ => Err(Error::param("mode", "only tabulated modes can be delayed")),
        }
    }

    /// Same shape with a new support duration; not defined for tabulated
    /// modes.
    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        match self {
            TemporalMode::Square { .. } => Self::square(duration),
            TemporalMode::OneSidedExp { rate, .. } => Self::one_sided_exp(*rate, duration),
            TemporalMode::DoubleExp { rate, .. } => Self::double_exp(*rate, duration),
            TemporalMode::Tabulated { .. } => Err(Error::param("mode", "tabulated modes have a fixed duration")),
        }
    }
}
