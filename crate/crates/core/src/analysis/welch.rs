//! Welch averaged-periodogram PSD estimates in vacuum units.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::TimeSeries;

pub const MIN_SEGMENT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 4096,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len < MIN_SEGMENT {
            return Err(Error::param(
                "segment_len",
                format!("must be >= {MIN_SEGMENT}, got {}", self.segment_len),
            ));
        }
        if !(0.0..=0.9).contains(&self.overlap) {
            return Err(Error::param(
                "overlap",
                format!("must lie in [0, 0.9], got {}", self.overlap),
            ));
        }
        Ok(())
    }

    fn hop(&self) -> usize {
        ((self.segment_len as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }
}

/// One-sided PSD table. `power` is the ratio to a unit-variance white
/// (vacuum) series, so vacuum reads one (0 dB) in every bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freq_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub segments: usize,
}

impl Psd {
    pub fn db(&self) -> Vec<f64> {
        self.power.iter().map(|p| 10.0 * p.log10()).collect()
    }

    /// Bin-wise ratio to a reference estimate on the same frequency grid.
    pub fn relative_to(&self, reference: &Psd) -> Result<Psd> {
        if self.freq_hz != reference.freq_hz {
            return Err(Error::Mismatch("PSD frequency grids differ".into()));
        }
        Ok(Psd {
            freq_hz: self.freq_hz.clone(),
            power: self.power.iter().zip(&reference.power).map(|(p, r)| p / r).collect(),
            segments: self.segments.min(reference.segments),
        })
    }

    /// Bins with `lo ≤ f ≤ hi`, as (frequency, power) pairs.
    pub fn band(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freq_hz
            .iter()
            .copied()
            .zip(self.power.iter().copied())
            .filter(move |(f, _)| *f >= lo && *f <= hi)
    }
}

/// Welch estimate of a single series.
pub fn welch_psd(series: &TimeSeries, cfg: &WelchConfig) -> Result<Psd> {
    welch_psd_multi(&[series], cfg)
}

/// Periodograms averaged over the segments of every series.
pub fn welch_psd_multi(series: &[&TimeSeries], cfg: &WelchConfig) -> Result<Psd> {
    cfg.validate()?;
    let Some(first) = series.first() else {
        return Err(Error::param("series", "no input series"));
    };
    let fs = first.sample_rate;
    let n = cfg.segment_len;
    if let Some(s) = series.iter().find(|s| s.sample_rate != fs) {
        return Err(Error::Mismatch(format!(
            "sample rate {} Hz differs from {fs} Hz",
            s.sample_rate
        )));
    }
    if let Some(s) = series.iter().find(|s| s.len() < n) {
        return Err(Error::param(
            "segment_len",
            format!("{n} exceeds series length {}", s.len()),
        ));
    }

    let window = cfg.window.coefficients(n);
    let norm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let hop = cfg.hop();
    for s in series {
        let mut start = 0;
        while start + n <= s.len() {
            for (b, (x, w)) in buf.iter_mut().zip(s.samples[start..start + n].iter().zip(&window)) {
                *b = Complex64::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.norm_sqr();
            }
            segments += 1;
            start += hop;
        }
    }
    let scale = (segments as f64 * norm).recip();
    Ok(Psd {
        freq_hz: (0..bins).map(|k| k as f64 * fs / n as f64).collect(),
        power: acc.into_iter().map(|a| a * scale).collect(),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{vacuum_record, Label};

    #[test]
    fn white_series_is_flat() {
        // ~100 segments: per-bin ripple about 0.5 dB rms
        let v = vacuum_record(1.05e-3, 50e6, 7).unwrap();
        let cfg = WelchConfig {
            segment_len: 1024,
            ..WelchConfig::default()
        };
        let psd = welch_psd(&v.a, &cfg).unwrap();
        assert!(psd.segments >= 100);
        let db: Vec<f64> = psd.band(50e3, 20e6).map(|(_, p)| 10.0 * p.log10()).collect();
        let rms = (db.iter().map(|d| d * d).sum::<f64>() / db.len() as f64).sqrt();
        assert!(rms < 0.5, "{rms}");

        // many segments: every bin within 0.5 dB
        let v = vacuum_record(20e-3, 50e6, 8).unwrap();
        let psd = welch_psd_multi(&[&v.a, &v.b], &cfg).unwrap();
        for (f, p) in psd.band(50e3, 20e6) {
            assert!((10.0 * p.log10()).abs() < 0.5, "{f}: {p}");
        }
    }

    #[test]
    fn sinusoid_peak_at_its_frequency() {
        let fs = 50e6;
        let samples: Vec<f64> = (0..1 << 14).map(|i| (2.0 * PI * 1e6 * i as f64 / fs).sin()).collect();
        let s = TimeSeries::new(fs, samples, Label::Unassigned).unwrap();
        let psd = welch_psd(&s, &WelchConfig::default()).unwrap();
        let (k, _) = psd.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let bin = fs / 4096.0;
        assert!((psd.freq_hz[k] - 1e6).abs() <= bin);
    }

    #[test]
    fn rejects_bad_configs() {
        let s = TimeSeries::new(1.0, vec![0.0; 100], Label::Unassigned).unwrap();
        let short = WelchConfig {
            segment_len: 32,
            ..WelchConfig::default()
        };
        assert!(welch_psd(&s, &short).is_err());
        let long = WelchConfig {
            segment_len: 128,
            ..WelchConfig::default()
        };
        assert!(welch_psd(&s, &long).is_err());
        let ov = WelchConfig {
            segment_len: 64,
            overlap: 0.95,
            ..WelchConfig::default()
        };
        assert!(welch_psd(&s, &ov).is_err());
    }
}
