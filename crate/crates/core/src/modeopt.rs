//! Temporal-mode shape search.
//!
//! The objective is the Duan sum of a mode against analytic EPR spectra, so
//! it is noiseless and bracketing searches apply. Parameters are searched on
//! a log scale: one-parameter families use a coarse scan followed by
//! golden-section refinement; two-parameter families alternate such line
//! searches coordinate by coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::TemporalMode;
use crate::spectra::{duan_sum, filtered_variance, EprSpectra};

pub const MIN_BUDGET: usize = 16;
/// Relative parameter resolution at which a line search stops.
pub const PARAM_RTOL: f64 = 1e-3;
const SCAN_POINTS: usize = 8;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Square,
    OneSidedExp,
    DoubleExp,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(FamilyKind::Square),
            "one_sided_exp" => Ok(FamilyKind::OneSidedExp),
            "double_exp" => Ok(FamilyKind::DoubleExp),
            _ => Err(Error::param("family", format!("unknown family `{s}`"))),
        }
    }
}

/// A mode family with a search interval per parameter. Parameters are
/// `[duration]` for square modes and `[rate, duration]` for the exponential
/// families (rate in 1/s, duration in s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFamily {
    pub kind: FamilyKind,
    pub bounds: Vec<(f64, f64)>,
}

impl ModeFamily {
    pub fn new(kind: FamilyKind, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let f = Self { kind, bounds };
        f.validate()?;
        Ok(f)
    }

    /// Durations 0.05–1 µs; rates 10⁴–10⁹ s⁻¹.
    pub fn with_default_bounds(kind: FamilyKind) -> Self {
        let duration = (0.05e-6, 1e-6);
        let bounds = match kind {
            FamilyKind::Square => vec![duration],
            _ => vec![(1e4, 1e9), duration],
        };
        Self { kind, bounds }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::Square => 1,
            _ => 2,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self.kind {
            FamilyKind::Square => &["duration"],
            _ => &["rate", "duration"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.dim() {
            return Err(Error::param(
                "bounds",
                format!(
                    "{:?} takes {} parameter(s), got {}",
                    self.kind,
                    self.dim(),
                    self.bounds.len()
                ),
            ));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
                return Err(Error::param(
                    "bounds",
                    format!("need 0 < lo <= hi < inf, got ({lo}, {hi})"),
                ));
            }
        }
        Ok(())
    }

    pub fn mode(&self, params: &[f64]) -> Result<TemporalMode> {
        match (self.kind, params) {
            (FamilyKind::Square, [d]) => TemporalMode::square(*d),
            (FamilyKind::OneSidedExp, [r, d]) => TemporalMode::one_sided_exp(*r, *d),
            (FamilyKind::DoubleExp, [r, d]) => TemporalMode::double_exp(*r, *d),
            _ => Err(Error::param("params", "wrong parameter count for family")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub duan: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_mode: TemporalMode,
    pub best_params: Vec<f64>,
    pub best_duan: f64,
    /// Every objective evaluation in call order.
    pub trace: Vec<Evaluation>,
    /// Variance path used for the objective.
    pub oracle: &'static str,
    pub converged: bool,
}

pub const ORACLE: &str = "analytic quadrature";

/// Duan sum of the filtered EPR variances for one mode.
pub fn mode_duan(spectra: &EprSpectra, mode: &TemporalMode) -> Result<f64> {
    duan_sum(
        filtered_variance(&spectra.diff_x, mode)?,
        filtered_variance(&spectra.sum_p, mode)?,
    )
}

struct Search<'a> {
    spectra: &'a EprSpectra,
    family: &'a ModeFamily,
    budget: usize,
    trace: Vec<Evaluation>,
}

struct OutOfBudget;

enum Stop {
    Budget,
    Failed(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Failed(e)
    }
}

impl From<OutOfBudget> for Stop {
    fn from(_: OutOfBudget) -> Self {
        Stop::Budget
    }
}

impl Search<'_> {
    fn eval(&mut self, params: Vec<f64>) -> std::result::Result<f64, Stop> {
        if self.trace.len() >= self.budget {
            return Err(OutOfBudget.into());
        }
        let duan = mode_duan(self.spectra, &self.family.mode(&params)?)?;
        self.trace.push(Evaluation { params, duan });
        Ok(duan)
    }

    fn at(point: &[f64], j: usize, u: f64) -> Vec<f64> {
        let mut p = point.to_vec();
        p[j] = u.exp();
        p
    }

    /// Minimizes along coordinate `j` (log scale), updating `point`.
    fn line_search(&mut self, point: &mut [f64], j: usize) -> std::result::Result<(), Stop> {
        let (lo, hi) = self.family.bounds[j];
        let (ulo, uhi) = (lo.ln(), hi.ln());
        if uhi - ulo <= PARAM_RTOL {
            point[j] = (0.5 * (ulo + uhi)).exp();
            return Ok(());
        }
        let grid: Vec<f64> = (0..SCAN_POINTS)
            .map(|k| ulo + (uhi - ulo) * k as f64 / (SCAN_POINTS - 1) as f64)
            .collect();
        let mut vals = Vec::with_capacity(SCAN_POINTS);
        for &u in &grid {
            vals.push(self.eval(Self::at(point, j, u))?);
        }
        let m = (0..SCAN_POINTS)
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap_or(0);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-9 * scale + 1e-14;
        let descending = (0..m).all(|k| vals[k] >= vals[k + 1] - tol);
        let ascending = (m..SCAN_POINTS - 1).all(|k| vals[k + 1] >= vals[k] - tol);
        if !(descending && ascending) {
            return Err(Error::Bracket {
                reason: format!(
                    "objective is not unimodal along {} (scan values {vals:?})",
                    self.family.param_names()[j]
                ),
                trace: self.trace.iter().map(|e| (e.params.clone(), e.duan)).collect(),
            }
            .into());
        }

        let mut best = (grid[m], vals[m]);
        let mut a = grid[m.saturating_sub(1)];
        let mut b = grid[(m + 1).min(SCAN_POINTS - 1)];
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        point[j] = best.0.exp();
        let mut fc = self.eval(Self::at(point, j, c))?;
        let mut fd = self.eval(Self::at(point, j, d))?;
        loop {
            for (u, v) in [(c, fc), (d, fd)] {
                if v < best.1 {
                    best = (u, v);
                }
            }
            point[j] = best.0.exp();
            if b - a < PARAM_RTOL {
                return Ok(());
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.eval(Self::at(point, j, c))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.eval(Self::at(point, j, d))?;
            }
        }
    }
}

/// Searches `family` for the mode with the smallest Duan sum using at most
/// `budget` objective evaluations.
pub fn optimize(spectra: &EprSpectra, family: &ModeFamily, budget: usize) -> Result<OptResult> {
    family.validate()?;
    if budget < MIN_BUDGET {
        return Err(Error::param("budget", format!("must be >= {MIN_BUDGET}, got {budget}")));
    }
    let mut search = Search {
        spectra,
        family,
        budget,
        trace: Vec::new(),
    };
    let mut point: Vec<f64> = family.bounds.iter().map(|(lo, hi)| (lo * hi).sqrt()).collect();
    let mut converged = false;
    let outcome: std::result::Result<(), Stop> = (|| loop {
        let before = point.clone();
        for j in 0..family.dim() {
            search.line_search(&mut point, j)?;
        }
        let moved = point.iter().zip(&before).any(|(p, q)| ((p - q) / q).abs() > PARAM_RTOL);
        if family.dim() == 1 || !moved {
            converged = true;
            return Ok(());
        }
    })();
    match outcome {
        Ok(()) | Err(Stop::Budget) => {}
        Err(Stop::Failed(e)) => return Err(e),
    }
    let best = search
        .trace
        .iter()
        .min_by(|a, b| a.duan.total_cmp(&b.duan))
        .cloned()
        .ok_or_else(|| Error::param("budget", "no evaluation completed"))?;
    Ok(OptResult {
        best_mode: family.mode(&best.params)?,
        best_params: best.params,
        best_duan: best.duan,
        trace: search.trace,
        oracle: ORACLE,
        converged,
    })
}

/// Exhaustive log-spaced grid with `points` values per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub evaluations: Vec<Evaluation>,
    pub best: Evaluation,
    /// Largest change of the objective between the grid minimum and any of
    /// its axis neighbours: the grid's one-step resolution at the optimum.
    pub step_resolution: f64,
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => return Vec::new(),
        1 => return vec![(lo * hi).sqrt()],
        _ => {}
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[points - 1] = hi;
    g
}

pub fn grid_search(spectra: &EprSpectra, family: &ModeFamily, points: usize) -> Result<GridResult> {
    family.validate()?;
    if points < 2 {
        return Err(Error::param("points", "need at least two grid points per axis"));
    }
    let axes: Vec<Vec<f64>> = family.bounds.iter().map(|&(lo, hi)| log_grid(lo, hi, points)).collect();
    let dim = axes.len();
    let total = points.pow(dim as u32);
    let index = |flat: usize| -> Vec<usize> {
        (0..dim)
            .map(|d| (flat / points.pow((dim - 1 - d) as u32)) % points)
            .collect()
    };
    let mut evaluations = Vec::with_capacity(total);
    for flat in 0..total {
        let params: Vec<f64> = index(flat).iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
        let duan = mode_duan(spectra, &family.mode(&params)?)?;
        evaluations.push(Evaluation { params, duan });
    }
    let (best_flat, best) = evaluations
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.duan.total_cmp(&b.1.duan))
        .map(|(i, e)| (i, e.clone()))
        .expect("non-empty grid");
    let idx = index(best_flat);
    let mut step_resolution = 0.0f64;
    for (d, &i) in idx.iter().enumerate() {
        let stride = points.pow((dim - 1 - d) as u32);
        if i > 0 {
            step_resolution = step_resolution.max((evaluations[best_flat - stride].duan - best.duan).abs());
        }
        if i + 1 < points {
            step_resolution = step_resolution.max((evaluations[best_flat + stride].duan - best.duan).abs());
        }
    }
    Ok(GridResult {
        evaluations,
        best,
        step_resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{epr_spectra, OpoParams, QuadPsd, Quadrature};

    fn reference_pair() -> EprSpectra {
        epr_spectra(
            &OpoParams::new(0.25, 7e6, 0.9, Quadrature::P).unwrap(),
            &OpoParams::new(0.22, 7e6, 0.9, Quadrature::X).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn flat_spectra_give_unity() {
        let flat = EprSpectra::from_parts(QuadPsd::vacuum(), QuadPsd::vacuum());
        for m in [
            TemporalMode::square(0.3e-6).unwrap(),
            TemporalMode::double_exp(1e6, 0.3e-6).unwrap(),
        ] {
            assert_eq!(mode_duan(&flat, &m).unwrap(), 1.0);
        }
        let r = optimize(&flat, &ModeFamily::with_default_bounds(FamilyKind::Square), 40).unwrap();
        assert_eq!(r.best_duan, 1.0);
    }

    #[test]
    fn square_optimum_matches_grid() {
        let s = reference_pair();
        let fam = ModeFamily::with_default_bounds(FamilyKind::Square);
        let opt = optimize(&s, &fam, 64).unwrap();
        let grid = grid_search(&s, &fam, 200).unwrap();
        assert!(opt.best_duan <= grid.best.duan + grid.step_resolution);
        assert_eq!(
            opt.best_duan,
            opt.trace.iter().map(|e| e.duan).fold(f64::INFINITY, f64::min)
        );
        assert_eq!(opt.oracle, ORACLE);
    }

    #[test]
    fn budget_limits() {
        let s = reference_pair();
        let fam = ModeFamily::with_default_bounds(FamilyKind::DoubleExp);
        assert!(optimize(&s, &fam, 15).is_err());
        let r = optimize(&s, &fam, 16).unwrap();
        assert!(r.trace.len() <= 16);
        assert!(!r.converged);
    }

    #[test]
    fn family_validation() {
        assert!(ModeFamily::new(FamilyKind::Square, vec![(1e-7, 1e-6), (1.0, 2.0)]).is_err());
        assert!(ModeFamily::new(FamilyKind::OneSidedExp, vec![(0.0, 1.0), (1e-7, 1e-6)]).is_err());
        assert!("triangle".parse::<FamilyKind>().is_err());
        assert_eq!("double_exp".parse::<FamilyKind>().unwrap(), FamilyKind::DoubleExp);
    }

    #[test]
    fn grid_spacing() {
        let g = log_grid(1.0, 100.0, 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
    }
}
