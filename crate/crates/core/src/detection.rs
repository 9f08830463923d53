//! Homodyne measurement chain: detector low-pass, electronic noise, DC-block
//! high-pass, ADC sampling and optional quantization.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{rng, stream_seed, vacuum_record, TimeSeries, TwoModeRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionChain {
    /// One-pole low-pass corner, Hz.
    pub detector_bandwidth: f64,
    /// First-order high-pass corner, Hz.
    pub highpass_cutoff: f64,
    /// Electronic noise PSD relative to the vacuum (shot-noise) PSD in the
    /// ADC band, dB.
    /// `None` disables the noise source.
    pub electronic_noise_db: Option<f64>,
    /// Output sample rate, Hz. Must divide the input rate; below it the
    /// record is band-limited to the new Nyquist frequency before sampling.
    pub adc_rate: f64,
    /// Quantizer depth; `None` keeps full precision.
    pub adc_bits: Option<u32>,
    /// Quantizer range is `±adc_full_scale` vacuum units.
    pub adc_full_scale: f64,
}

impl Default for DetectionChain {
    fn default() -> Self {
        Self {
            detector_bandwidth: 8.4e6,
            highpass_cutoff: 5e3,
            electronic_noise_db: Some(-20.0),
            adc_rate: 50e6,
            adc_bits: None,
            adc_full_scale: 8.0,
        }
    }
}

/// Non-fatal findings about a chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Quantizer step above 0.1 vacuum units.
    CoarseQuantization { step: f64 },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::CoarseQuantization { step } => {
                write!(f, "ADC quantization step {step:.3} exceeds 0.1 vacuum units")
            }
        }
    }
}

/// Bilinear first-order section `y[n] = b0·x[n] + b1·x[n-1] - a1·y[n-1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    b0: f64,
    b1: f64,
    a1: f64,
}

impl FirstOrder {
    pub const IDENTITY: FirstOrder = FirstOrder {
        b0: 1.0,
        b1: 0.0,
        a1: 0.0,
    };

    /// Prewarped so `|H|² = 1/2` exactly at `fc`. A corner at or above
    /// Nyquist is transparent.
    pub fn lowpass(fc: f64, fs: f64) -> Self {
        if fc >= 0.5 * fs {
            return Self::IDENTITY;
        }
        let k = (PI * fc / fs).tan();
        Self {
            b0: k / (1.0 + k),
            b1: k / (1.0 + k),
            a1: (k - 1.0) / (k + 1.0),
        }
    }

    pub fn highpass(fc: f64, fs: f64) -> Self {
        let k = (PI * fc / fs).tan();
        Self {
            b0: 1.0 / (1.0 + k),
            b1: -1.0 / (1.0 + k),
            a1: (k - 1.0) / (k + 1.0),
        }
    }

    /// `|H(e^{iω})|²` at frequency `f`.
    pub fn power_response(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let (s, c) = w.sin_cos();
        let num = (self.b0 + self.b1 * c).powi(2) + (self.b1 * s).powi(2);
        let den = (1.0 + self.a1 * c).powi(2) + (self.a1 * s).powi(2);
        num / den
    }

    pub fn apply(&self, x: &mut [f64]) {
        let (mut x1, mut y1) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b0 * *v + self.b1 * x1 - self.a1 * y1;
            x1 = *v;
            y1 = y;
            *v = y;
        }
    }
}

impl DetectionChain {
    /// Checks the chain against an input rate `fs`.
    pub fn validate(&self, fs: f64) -> Result<Vec<Diagnostic>> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.highpass_cutoff) {
            return Err(Error::param(
                "highpass_cutoff",
                format!("must be > 0, got {}", self.highpass_cutoff),
            ));
        }
        if !(finite_pos(self.detector_bandwidth) && self.detector_bandwidth > self.highpass_cutoff) {
            return Err(Error::param(
                "detector_bandwidth",
                format!(
                    "must exceed highpass_cutoff ({} Hz), got {}",
                    self.highpass_cutoff, self.detector_bandwidth
                ),
            ));
        }
        if !finite_pos(self.adc_rate) || self.adc_rate > fs {
            return Err(Error::param(
                "adc_rate",
                format!("must be in (0, {fs}] (the input rate), got {}", self.adc_rate),
            ));
        }
        self.decimation(fs)?;
        if self.highpass_cutoff >= 0.5 * fs {
            return Err(Error::param(
                "highpass_cutoff",
                "must lie below the input Nyquist frequency",
            ));
        }
        if let Some(db) = self.electronic_noise_db {
            if db.is_nan() || db == f64::INFINITY {
                return Err(Error::param("electronic_noise_db", format!("invalid level {db}")));
            }
        }
        let mut diags = Vec::new();
        if let Some(bits) = self.adc_bits {
            if bits == 0 || bits > 52 {
                return Err(Error::param("adc_bits", format!("must be in 1..=52, got {bits}")));
            }
            if !finite_pos(self.adc_full_scale) {
                return Err(Error::param("adc_full_scale", "must be > 0"));
            }
            let step = self.quantization_step().unwrap_or(0.0);
            if step > 0.1 {
                diags.push(Diagnostic::CoarseQuantization { step });
            }
        }
        Ok(diags)
    }

    pub fn quantization_step(&self) -> Option<f64> {
        self.adc_bits.map(|b| 2.0 * self.adc_full_scale / 2f64.powi(b as i32))
    }

    fn decimation(&self, fs: f64) -> Result<usize> {
        let ratio = fs / self.adc_rate;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
            return Err(Error::param(
                "adc_rate",
                format!("input rate {fs} Hz is not an integer multiple of {} Hz", self.adc_rate),
            ));
        }
        Ok(k as usize)
    }

    /// Combined low-pass × high-pass power response at the input rate.
    pub fn power_response(&self, f: f64, fs: f64) -> f64 {
        FirstOrder::lowpass(self.detector_bandwidth, fs).power_response(f, fs)
            * FirstOrder::highpass(self.highpass_cutoff, fs).power_response(f, fs)
    }

    fn process(&self, series: &TimeSeries, seed: u64, decimate: usize) -> Result<TimeSeries> {
        let fs = series.sample_rate;
        let mut x = series.samples.clone();
        FirstOrder::lowpass(self.detector_bandwidth, fs).apply(&mut x);
        if let Some(db) = self.electronic_noise_db {
            // vacuum has unit per-sample variance at the input rate
            let sigma = 10f64.powf(db / 20.0);
            let mut r = rng(seed);
            for v in x.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut r);
                *v += sigma * g;
            }
        }
        FirstOrder::highpass(self.highpass_cutoff, fs).apply(&mut x);
        if decimate > 1 {
            anti_alias(&mut x, decimate);
        }
        let mut out: Vec<f64> = x.into_iter().step_by(decimate).collect();
        if let Some(q) = self.quantization_step() {
            let fsc = self.adc_full_scale;
            for v in out.iter_mut() {
                *v = ((*v / q).round() * q).clamp(-fsc, fsc);
            }
        }
        TimeSeries::new(fs / decimate as f64, out, series.label)
    }
}

/// Ideal low-pass at the output Nyquist frequency `fs/(2·decimate)`,
/// applied over the whole (circular) record. The bin exactly at the cutoff
/// keeps half its power.
fn anti_alias(x: &mut [f64], decimate: usize) {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    // bin k sits at min(k, n-k)/n of the input rate; the cutoff is 1/(2·decimate)
    let cut = n as f64 / (2 * decimate) as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64;
        if f > cut + 1e-9 {
            *c = Complex64::new(0.0, 0.0);
        } else if (f - cut).abs() <= 1e-9 {
            *c *= std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for (v, c) in x.iter_mut().zip(&buf) {
        *v = c.re * scale;
    }
}

/// Runs both channels of `record` through `chain`; each channel gets its own
/// noise stream derived from `seed`.
pub fn detect(record: &TwoModeRecord, chain: &DetectionChain, seed: u64) -> Result<TwoModeRecord> {
    record.check_shape()?;
    let fs = record.sample_rate();
    for d in chain.validate(fs)? {
        log::warn!("{d}");
    }
    let k = chain.decimation(fs)?;
    Ok(TwoModeRecord {
        a: chain.process(&record.a, stream_seed(seed, 11), k)?,
        b: chain.process(&record.b, stream_seed(seed, 12), k)?,
        ..record.clone()
    })
}

/// Vacuum record passed through the same chain: the 0 dB reference.
pub fn calibrate(chain: &DetectionChain, duration: f64, fs: f64, seed: u64) -> Result<TwoModeRecord> {
    let vac = vacuum_record(duration, fs, stream_seed(seed, 21))?;
    detect(&vac, chain, stream_seed(seed, 22))
}
