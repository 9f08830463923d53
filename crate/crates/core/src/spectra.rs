//! Sub-threshold OPO squeezing spectra, EPR pair spectra, and temporal-mode
//! filtered variances.
//!
//! All spectra are two-sided and vacuum-normalized (vacuum ≡ 1). Public
//! frequencies are in Hz; angular frequency only appears in
//! [`QuadPsd::density_angular`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::TemporalMode;
use crate::quadrature::{integrate_with_breakpoints, Tolerance};

/// Band limit, in units of the widest Lorentzian, beyond which a PSD is 1.
pub const DEFAULT_BAND_LIMIT_FACTOR: f64 = 100.0;

/// Allowed deviation from vacuum at the Nyquist frequency of a synthesis.
pub const NYQUIST_DEVIATION_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::X => Quadrature::P,
            Quadrature::P => Quadrature::X,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Squeezed,
    Antisqueezed,
}

/// Physical parameters of one sub-threshold OPO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpoParams {
    /// `sqrt(P / P_threshold)`, in `[0, 1)`.
    pub pump_param: f64,
    /// Cavity half-width at half-maximum, Hz.
    pub hwhm: f64,
    /// Total escape × detection efficiency, `[0, 1]`.
    pub efficiency: f64,
    /// Quadrature whose noise is reduced.
    pub squeeze_phase: Quadrature,
}

impl OpoParams {
    pub fn new(pump_param: f64, hwhm: f64, efficiency: f64, squeeze_phase: Quadrature) -> Result<Self> {
        let p = Self {
            pump_param,
            hwhm,
            efficiency,
            squeeze_phase,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.pump_param.is_finite() || self.pump_param < 0.0 {
            return Err(Error::param(
                "pump_param",
                format!("must be >= 0, got {}", self.pump_param),
            ));
        }
        if self.pump_param >= 1.0 {
            return Err(Error::AboveThreshold(self.pump_param));
        }
        if !(self.hwhm.is_finite() && self.hwhm > 0.0) {
            return Err(Error::param("hwhm", format!("must be > 0, got {}", self.hwhm)));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param(
                "efficiency",
                format!("must lie in [0, 1], got {}", self.efficiency),
            ));
        }
        Ok(())
    }
}

/// One spectral term `amplitude / (1 + (f / width)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub amplitude: f64,
    /// Half-width at half-maximum, Hz.
    pub width: f64,
}

impl Lorentzian {
    fn at(&self, f: f64) -> f64 {
        let r = f / self.width;
        self.amplitude / (1.0 + r * r)
    }
}

/// Vacuum-normalized two-sided quadrature PSD
/// `S(f) = 1 + Σ_k a_k / (1 + (f/w_k)²)` for `|f| ≤ band_limit`, `S = 1` beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadPsd {
    terms: Vec<Lorentzian>,
    band_limit: f64,
}

impl QuadPsd {
    pub fn vacuum() -> Self {
        Self {
            terms: Vec::new(),
            band_limit: f64::INFINITY,
        }
    }

    /// `band_limit` defaults to [`DEFAULT_BAND_LIMIT_FACTOR`] × widest term.
    pub fn from_terms(terms: Vec<Lorentzian>, band_limit: Option<f64>) -> Result<Self> {
        for t in &terms {
            if !(t.width.is_finite() && t.width > 0.0) || !t.amplitude.is_finite() {
                return Err(Error::param("terms", format!("invalid Lorentzian {t:?}")));
            }
        }
        // S ≥ 0 everywhere is guaranteed when the negative parts cannot exceed 1.
        let negative: f64 = terms.iter().map(|t| t.amplitude.min(0.0)).sum();
        if negative < -1.0 {
            return Err(Error::param("terms", "spectrum would go negative"));
        }
        let terms: Vec<_> = terms.into_iter().filter(|t| t.amplitude != 0.0).collect();
        let widest = terms.iter().map(|t| t.width).fold(0.0, f64::max);
        let band_limit = match band_limit {
            Some(b) if b.is_finite() && b > 0.0 => b,
            Some(b) => return Err(Error::param("band_limit", format!("must be > 0, got {b}"))),
            None if terms.is_empty() => f64::INFINITY,
            None => DEFAULT_BAND_LIMIT_FACTOR * widest,
        };
        Ok(Self { terms, band_limit })
    }

    pub fn terms(&self) -> &[Lorentzian] {
        &self.terms
    }

    pub fn band_limit(&self) -> f64 {
        self.band_limit
    }

    pub fn is_flat(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn widest(&self) -> f64 {
        self.terms.iter().map(|t| t.width).fold(0.0, f64::max)
    }

    /// `S(f) - 1`, zero beyond the band limit.
    pub fn excess(&self, f: f64) -> f64 {
        let f = f.abs();
        if f > self.band_limit {
            return 0.0;
        }
        self.terms.iter().map(|t| t.at(f)).sum()
    }

    /// `S(f)` for `f` in Hz.
    pub fn density(&self, f: f64) -> f64 {
        1.0 + self.excess(f)
    }

    /// `S(Ω)` for angular frequency `Ω` in rad/s.
    pub fn density_angular(&self, omega: f64) -> f64 {
        self.density(omega / (2.0 * PI))
    }

    /// `|S(fs/2) - 1|`, the residual that a synthesis at rate `fs` would alias.
    pub fn nyquist_deviation(&self, fs: f64) -> f64 {
        self.excess(0.5 * fs).abs()
    }
}

/// Squeezed / antisqueezed quadrature spectrum of a sub-threshold OPO:
/// `S∓(f) = 1 ∓ η·4x / ((1 ± x)² + (f/γ)²)`.
pub fn opo_spectrum(params: &OpoParams, branch: Branch) -> Result<QuadPsd> {
    params.validate()?;
    let x = params.pump_param;
    let eta = params.efficiency;
    if x == 0.0 || eta == 0.0 {
        return QuadPsd::from_terms(Vec::new(), None);
    }
    // Rewritten as a Lorentzian of width (1 ± x)γ.
    let (sign, scale) = match branch {
        Branch::Squeezed => (-1.0, 1.0 + x),
        Branch::Antisqueezed => (1.0, 1.0 - x),
    };
    let term = Lorentzian {
        amplitude: sign * eta * 4.0 * x / (scale * scale),
        width: scale * params.hwhm,
    };
    QuadPsd::from_terms(vec![term], Some(DEFAULT_BAND_LIMIT_FACTOR * params.hwhm))
}

/// Spectra of the EPR combinations behind a half beam splitter.
#[derive(Debug, Clone, PartialEq)]
pub struct EprSpectra {
    /// `(x_A - x_B)/√2`
    pub diff_x: QuadPsd,
    /// `(p_A + p_B)/√2`
    pub sum_p: QuadPsd,
    /// `(p_A - p_B)/√2`, conjugate partner of `diff_x`.
    pub diff_p: QuadPsd,
    /// `(x_A + x_B)/√2`, conjugate partner of `sum_p`.
    pub sum_x: QuadPsd,
}

impl EprSpectra {
    /// Build directly from the two EPR variances (conjugates left at vacuum).
    pub fn from_parts(diff_x: QuadPsd, sum_p: QuadPsd) -> Self {
        Self {
            diff_x,
            sum_p,
            diff_p: QuadPsd::vacuum(),
            sum_x: QuadPsd::vacuum(),
        }
    }

    /// Swaps the roles of the two EPR combinations.
    pub fn swapped(&self) -> Self {
        Self {
            diff_x: self.sum_p.clone(),
            sum_p: self.diff_x.clone(),
            diff_p: self.sum_x.clone(),
            sum_x: self.diff_p.clone(),
        }
    }

    /// `S·S_conjugate ≥ 1` at every frequency of `grid` (Hz).
    pub fn satisfies_uncertainty(&self, grid: &[f64]) -> bool {
        grid.iter().all(|&f| {
            self.diff_x.density(f) * self.diff_p.density(f) >= 1.0 - 1e-12
                && self.sum_p.density(f) * self.sum_x.density(f) >= 1.0 - 1e-12
        })
    }
}

/// Splits an OPO pair into the (P-squeezed, X-squeezed) inputs of the HBS.
pub(crate) fn split_pair<'a>(opo1: &'a OpoParams, opo2: &'a OpoParams) -> Result<(&'a OpoParams, &'a OpoParams)> {
    match (opo1.squeeze_phase, opo2.squeeze_phase) {
        (Quadrature::P, Quadrature::X) => Ok((opo1, opo2)),
        (Quadrature::X, Quadrature::P) => Ok((opo2, opo1)),
        _ => Err(Error::AmbiguousConfiguration),
    }
}

/// The X-squeezed OPO feeds `x_A - x_B = √2·x₂`; the P-squeezed one feeds
/// `p_A + p_B = √2·p₁`.
pub fn epr_spectra(opo1: &OpoParams, opo2: &OpoParams) -> Result<EprSpectra> {
    opo1.validate()?;
    opo2.validate()?;
    let (p_opo, x_opo) = split_pair(opo1, opo2)?;
    Ok(EprSpectra {
        diff_x: opo_spectrum(x_opo, Branch::Squeezed)?,
        sum_p: opo_spectrum(p_opo, Branch::Squeezed)?,
        diff_p: opo_spectrum(x_opo, Branch::Antisqueezed)?,
        sum_x: opo_spectrum(p_opo, Branch::Antisqueezed)?,
    })
}

fn breakpoints(psd: &QuadPsd, mode: &TemporalMode) -> Vec<f64> {
    let limit = psd.band_limit();
    let d = mode.duration();
    // Half a sinc lobe per panel where both the mode weight and the
    // Lorentzians are structured; geometric panels beyond.
    let step = 0.5 / d;
    let dense = limit.min(20.0 / d + 40.0 * psd.widest());
    let n = (dense / step).ceil() as usize;
    let mut bp: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(dense)).collect();
    bp.dedup();
    let mut f = dense;
    while f < limit {
        f = (2.0 * f).min(limit);
        bp.push(f);
    }
    bp
}

/// `(1/2π)∫ S(Ω)|F(Ω)|² dΩ` for a unit-norm mode.
///
/// The flat part integrates to exactly one by Parseval, so only `S - 1` is
/// integrated numerically; the spectrum is one beyond its band limit, which
/// makes the tail contribution exactly zero in this form.
pub fn filtered_variance(psd: &QuadPsd, mode: &TemporalMode) -> Result<f64> {
    mode.validate()?;
    let norm = mode.norm_sq();
    if (norm - 1.0).abs() > crate::mode::NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    if psd.is_flat() {
        return Ok(1.0);
    }
    let bp = breakpoints(psd, mode);
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-11,
        max_intervals: 500_000,
    };
    let half = integrate_with_breakpoints(|f| psd.excess(f) * mode.spectral_weight(f), &bp, tol)?;
    Ok(1.0 + 2.0 * half)
}

/// `10·log10(ratio)`.
pub fn to_db(ratio: f64) -> Result<f64> {
    if ratio.is_finite() && ratio > 0.0 {
        Ok(10.0 * ratio.log10())
    } else {
        Err(Error::param("ratio", format!("must be > 0, got {ratio}")))
    }
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Mean of the two vacuum-normalized EPR variances; below one certifies
/// inseparability, exactly one is the separable bound.
pub fn duan_sum(var_diff_x: f64, var_sum_p: f64) -> Result<f64> {
    for (name, v) in [("var_diff_x", var_diff_x), ("var_sum_p", var_sum_p)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(name, format!("variance must be >= 0, got {v}")));
        }
    }
    Ok(0.5 * (var_diff_x + var_sum_p))
}

/// Pump parameter at which the squeezed-branch filtered variance of an OPO
/// with the given efficiency and bandwidth equals `target` (vacuum units).
pub fn calibrate_pump(target: f64, efficiency: f64, hwhm: f64, mode: &TemporalMode) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("target", format!("must lie in (0, 1), got {target}")));
    }
    let variance = |x: f64| -> Result<f64> {
        let p = OpoParams::new(x, hwhm, efficiency, Quadrature::X)?;
        filtered_variance(&opo_spectrum(&p, Branch::Squeezed)?, mode)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    if variance(hi)? > target {
        return Err(Error::param(
            "target",
            format!("{target} unreachable below threshold at efficiency {efficiency}"),
        ));
    }
    // variance decreases monotonically in x
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if variance(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
