use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::mode::TemporalMode;
use crate::stats;
use crate::synth::{Label, TimeSeries};

/// Filtered quadrature values of consecutive temporal-mode windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeValues {
    pub values: Vec<f64>,
    pub mode: TemporalMode,
    pub source_label: Label,
    pub sample_rate: f64,
    pub window_samples: usize,
    pub stride_samples: usize,
}

impl ModeValues {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Overlapping windows share samples, so values are not independent and
    /// `√(2/N)`-style standard errors understate the spread.
    pub fn overlapping(&self) -> bool {
        self.stride_samples < self.window_samples
    }

    pub fn stride(&self) -> f64 {
        self.stride_samples as f64 / self.sample_rate
    }

    /// Mean-subtracted sample variance.
    pub fn variance(&self) -> f64 {
        stats::variance(&self.values)
    }

    /// `(a ± b)/√2` of two equally long value sets.
    pub fn combine(a: &ModeValues, b: &ModeValues, sign: f64) -> Result<ModeValues> {
        if a.count() != b.count() || a.sample_rate != b.sample_rate {
            return Err(Error::Mismatch(format!(
                "cannot combine {} values @ {} Hz with {} values @ {} Hz",
                a.count(),
                a.sample_rate,
                b.count(),
                b.sample_rate
            )));
        }
        Ok(ModeValues {
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| FRAC_1_SQRT_2 * (x + sign * y))
                .collect(),
            source_label: Label::Unassigned,
            ..a.clone()
        })
    }
}

/// `x^f_k = √Δt · Σ_i f(t_i) x_{k·stride + i}` for every full window.
///
/// The window is `round(duration·fs)` samples and the mode is renormalized on
/// that grid, so a vacuum series gives unit variance for any mode.
pub fn extract_modes(series: &TimeSeries, mode: &TemporalMode, stride: f64) -> Result<ModeValues> {
    mode.validate()?;
    let dt = series.dt();
    let weights = mode.discretize(dt)?;
    let window = weights.len();
    if window > series.len() {
        return Err(Error::param(
            "mode",
            format!("mode spans {window} samples but the series has only {}", series.len()),
        ));
    }
    if !(stride.is_finite() && stride > 0.0) {
        return Err(Error::param("stride", format!("must be > 0, got {stride}")));
    }
    let step = (stride * series.sample_rate).round() as usize;
    if step == 0 {
        return Err(Error::param("stride", "shorter than one sample"));
    }
    let scale = dt.sqrt();
    let values: Vec<f64> = series
        .samples
        .windows(window)
        .step_by(step)
        .map(|w| scale * w.iter().zip(&weights).map(|(x, f)| x * f).sum::<f64>())
        .collect();
    if values.is_empty() {
        return Err(Error::param("series", "no complete window"));
    }
    Ok(ModeValues {
        values,
        mode: mode.clone(),
        source_label: series.label,
        sample_rate: series.sample_rate,
        window_samples: window,
        stride_samples: step,
    })
}

/// Non-overlapping extraction with stride equal to the mode duration.
pub fn extract_adjacent(series: &TimeSeries, mode: &TemporalMode) -> Result<ModeValues> {
    let window = (mode.duration() * series.sample_rate).round().max(1.0);
    extract_modes(series, mode, window / series.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::vacuum_record;

    #[test]
    fn reference_mode_count() {
        let v = vacuum_record(2e-3, 50e6, 1).unwrap();
        let m = TemporalMode::square(0.2e-6).unwrap();
        let mv = extract_adjacent(&v.a, &m).unwrap();
        assert_eq!(mv.count(), 10_000);
        assert_eq!(mv.window_samples, 10);
        assert!(!mv.overlapping());
        let se = (2.0f64 / 1e4).sqrt();
        assert!((mv.variance() - 1.0).abs() < 3.0 * se, "{}", mv.variance());
        assert!(stats::mean(&mv.values).abs() < 3.0 * 1e-2);
    }

    #[test]
    fn constant_input_scales_with_root_window() {
        let fs = 50e6;
        let s = TimeSeries::new(fs, vec![2.0; 100], Label::XA).unwrap();
        let m = TemporalMode::square(0.2e-6).unwrap();
        let mv = extract_adjacent(&s, &m).unwrap();
        // √Δt · 10 · c/√T = c·√10
        for v in &mv.values {
            assert!((v - 2.0 * 10f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_stride_flagged() {
        let s = TimeSeries::new(50e6, vec![1.0; 100], Label::XA).unwrap();
        let m = TemporalMode::square(0.2e-6).unwrap();
        let mv = extract_modes(&s, &m, 0.1e-6).unwrap();
        assert!(mv.overlapping());
        assert_eq!(mv.count(), 19);
    }

    #[test]
    fn rejects_too_long_or_empty() {
        let s = TimeSeries::new(50e6, vec![1.0; 5], Label::XA).unwrap();
        assert!(extract_adjacent(&s, &TemporalMode::square(0.2e-6).unwrap()).is_err());
        assert!(extract_adjacent(&s, &TemporalMode::square(1e-9).unwrap()).is_err());
        assert!(extract_modes(&s, &TemporalMode::square(40e-9).unwrap(), 0.0).is_err());
    }

    #[test]
    fn combine_requires_equal_length() {
        let s = TimeSeries::new(50e6, vec![1.0; 40], Label::XA).unwrap();
        let t = TimeSeries::new(50e6, vec![1.0; 60], Label::XB).unwrap();
        let m = TemporalMode::square(0.2e-6).unwrap();
        let a = extract_adjacent(&s, &m).unwrap();
        let b = extract_adjacent(&t, &m).unwrap();
        assert!(ModeValues::combine(&a, &b, -1.0).is_err());
        let d = ModeValues::combine(&a, &a, -1.0).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-15));
    }
}
