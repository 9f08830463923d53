//! Sampled realizations of stationary Gaussian quadrature processes and the
//! half-beam-splitter combination that turns two squeezed beams into an EPR
//! pair.
//!
//! Samples are in vacuum units: a vacuum series has unit per-sample variance,
//! so the square temporal mode `√Δt·Σ x_i/√T` of any integer number of
//! samples has variance one.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{opo_spectrum, split_pair, Branch, OpoParams, QuadPsd, Quadrature, NYQUIST_DEVIATION_LIMIT};

/// Which field quadrature a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    XA,
    PA,
    XB,
    PB,
    Vacuum,
    /// A single-beam or derived series not tied to an output port.
    Unassigned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub label: Label,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>, label: Label) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param("sample_rate", format!("must be > 0, got {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(Error::param("samples", "series must hold at least one sample"));
        }
        Ok(Self {
            sample_rate,
            samples,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.sample_rate.recip()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| k * x).collect(),
            ..self.clone()
        }
    }
}

/// Measurement setting of one run: both homodynes lock to the same quadrature.
pub type Setting = Quadrature;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeRecord {
    pub a: TimeSeries,
    pub b: TimeSeries,
    /// `None` for a vacuum reference.
    pub setting: Option<Setting>,
    pub seed: u64,
    /// Generating OPOs in the order given to [`epr_record`].
    pub params: Option<(OpoParams, OpoParams)>,
}

impl TwoModeRecord {
    pub fn sample_rate(&self) -> f64 {
        self.a.sample_rate
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        if self.a.sample_rate != self.b.sample_rate || self.a.len() != self.b.len() {
            return Err(Error::Mismatch(format!(
                "channels differ: {} samples @ {} Hz vs {} samples @ {} Hz",
                self.a.len(),
                self.a.sample_rate,
                self.b.len(),
                self.b.sample_rate
            )));
        }
        Ok(())
    }
}

/// Derives an independent 64-bit stream seed (SplitMix64 finalizer).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian series of `n` samples at `fs` whose expected periodogram is the
/// vacuum-normalized `psd` on `[-fs/2, fs/2]`.
///
/// `n` must be a power of two. Each non-negative frequency bin receives an
/// independent complex Gaussian amplitude with `E|X_k|² = n·S(f_k)` (real at
/// DC and Nyquist); the negative half is the Hermitian mirror.
pub fn synthesize_colored(psd: &QuadPsd, n: usize, fs: f64, seed: u64) -> Result<TimeSeries> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::param("n", format!("must be a power of two >= 2, got {n}")));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::param("fs", format!("must be > 0, got {fs}")));
    }
    let deviation = psd.nyquist_deviation(fs);
    if deviation > NYQUIST_DEVIATION_LIMIT {
        return Err(Error::Aliasing { fs, deviation });
    }

    let mut rng = rng(seed);
    let nf = n as f64;
    let half = n / 2;
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=half {
        let s = psd.density(k as f64 * fs / nf);
        let g1: f64 = StandardNormal.sample(&mut rng);
        let g2: f64 = StandardNormal.sample(&mut rng);
        if k == 0 || k == half {
            spec[k] = Complex64::new((nf * s).sqrt() * g1, 0.0);
        } else {
            let amp = (0.5 * nf * s).sqrt();
            spec[k] = Complex64::new(amp * g1, amp * g2);
            spec[n - k] = spec[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    let samples = spec.iter().map(|c| c.re / nf).collect();
    TimeSeries::new(fs, samples, Label::Unassigned)
}

fn sample_count(duration: f64, fs: f64) -> Result<usize> {
    if !(duration.is_finite() && duration > 0.0 && fs.is_finite() && fs > 0.0) {
        return Err(Error::param("duration", "duration and fs must be > 0"));
    }
    let n = (duration * fs).round() as usize;
    if n < 2 {
        return Err(Error::param(
            "duration",
            format!("{duration} s at {fs} Hz gives fewer than 2 samples"),
        ));
    }
    Ok(n)
}

fn synthesize_truncated(psd: &QuadPsd, n: usize, fs: f64, seed: u64) -> Result<TimeSeries> {
    let mut s = synthesize_colored(psd, n.next_power_of_two(), fs, seed)?;
    s.samples.truncate(n);
    Ok(s)
}

/// Samplewise half-beam-splitter: `A = (u+v)/√2`, `B = (u-v)/√2`.
fn beam_split(u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    u.iter()
        .zip(v)
        .map(|(&u, &v)| (FRAC_1_SQRT_2 * (u + v), FRAC_1_SQRT_2 * (u - v)))
        .unzip()
}

fn labels(setting: Setting) -> (Label, Label) {
    match setting {
        Quadrature::X => (Label::XA, Label::XB),
        Quadrature::P => (Label::PA, Label::PB),
    }
}

/// One measurement run of the EPR beams in the given quadrature setting.
///
/// The P-squeezed beam enters the `+` port and the X-squeezed beam the `-`
/// port of the beam splitter, so `(x_A - x_B)/√2` carries the X-squeezed
/// beam and `(p_A + p_B)/√2` the P-squeezed one. The two beams are
/// independent processes; a series longer than a power of two is cut from
/// the next larger synthesis block.
pub fn epr_record(
    opo1: &OpoParams,
    opo2: &OpoParams,
    duration: f64,
    fs: f64,
    setting: Setting,
    seed: u64,
) -> Result<TwoModeRecord> {
    opo1.validate()?;
    opo2.validate()?;
    let (p_opo, x_opo) = split_pair(opo1, opo2)?;
    let n = sample_count(duration, fs)?;
    let branch = |opo: &OpoParams| {
        if opo.squeeze_phase == setting {
            Branch::Squeezed
        } else {
            Branch::Antisqueezed
        }
    };
    let beam_p = synthesize_truncated(&opo_spectrum(p_opo, branch(p_opo))?, n, fs, stream_seed(seed, 1))?;
    let beam_x = synthesize_truncated(&opo_spectrum(x_opo, branch(x_opo))?, n, fs, stream_seed(seed, 2))?;
    let (a, b) = beam_split(&beam_p.samples, &beam_x.samples);
    let (la, lb) = labels(setting);
    Ok(TwoModeRecord {
        a: TimeSeries::new(fs, a, la)?,
        b: TimeSeries::new(fs, b, lb)?,
        setting: Some(setting),
        seed,
        params: Some((*opo1, *opo2)),
    })
}

/// Two independent white vacuum channels.
pub fn vacuum_record(duration: f64, fs: f64, seed: u64) -> Result<TwoModeRecord> {
    let n = sample_count(duration, fs)?;
    let white = |stream| -> Result<TimeSeries> {
        let mut r = rng(stream_seed(seed, stream));
        let samples = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        TimeSeries::new(fs, samples, Label::Vacuum)
    };
    Ok(TwoModeRecord {
        a: white(1)?,
        b: white(2)?,
        setting: None,
        seed,
        params: None,
    })
}
