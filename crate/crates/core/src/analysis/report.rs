use serde::{Deserialize, Serialize};

use super::modes::{extract_adjacent, ModeValues};
use crate::error::{Error, Result};
use crate::mode::TemporalMode;
use crate::spectra::{duan_sum, from_db, to_db, Quadrature};
use crate::stats;
use crate::synth::TwoModeRecord;

/// How per-repetition results are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbAveraging {
    /// Average the dB values (error bars in dB).
    #[default]
    Decibel,
    /// Average linear variance ratios, then convert.
    Linear,
}

/// Mean with optional standard error (absent for a single repetition).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Estimate {
    fn from_samples(x: &[f64]) -> Self {
        Self {
            mean: stats::mean(x),
            se: stats::std_error(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionRow {
    pub index: usize,
    /// Vacuum-normalized variance of `(x_A - x_B)/√2`.
    pub var_diff_x: f64,
    /// Vacuum-normalized variance of `(p_A + p_B)/√2`.
    pub var_sum_p: f64,
    pub var_diff_x_db: f64,
    pub var_sum_p_db: f64,
    pub duan: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EprReport {
    pub var_diff_x_db: Estimate,
    pub var_sum_p_db: Estimate,
    /// Linear ratios consistent with the dB summary under `averaging`.
    pub var_diff_x: f64,
    pub var_sum_p: f64,
    /// Exactly `duan_sum(var_diff_x, var_sum_p)`; the SE is the spread of
    /// the per-repetition values.
    pub duan: Estimate,
    pub repetitions: usize,
    pub rows: Vec<RepetitionRow>,
    pub mode: TemporalMode,
    pub modes_per_repetition: usize,
    pub averaging: DbAveraging,
    /// Set when overlapping windows make the values correlated.
    pub correlated_values: bool,
    pub fingerprint: Option<String>,
}

impl EprReport {
    pub fn separable_bound(&self) -> f64 {
        1.0
    }

    pub fn is_entangled(&self) -> bool {
        self.duan.mean < self.separable_bound()
    }
}

struct VacuumLevels {
    diff: f64,
    sum: f64,
}

/// Ratio test between two independent variance estimates from `n` values
/// each: `ln(v1/v2)` has standard deviation ≈ `2/√(n-1)`.
fn consistent(v1: f64, v2: f64, n: usize, sigmas: f64) -> bool {
    (v1 / v2).ln().abs() <= sigmas * 2.0 / ((n as f64) - 1.0).sqrt()
}

fn vacuum_levels(r: &TwoModeRecord, mode: &TemporalMode) -> Result<VacuumLevels> {
    let a = extract_adjacent(&r.a, mode)?;
    let b = extract_adjacent(&r.b, mode)?;
    let n = a.count();
    let diff = ModeValues::combine(&a, &b, -1.0)?.variance();
    let sum = ModeValues::combine(&a, &b, 1.0)?.variance();
    // For a genuine vacuum pair the two channels are independent and equal,
    // so both the channel ratio and the diff/sum ratio sit at one.
    if !consistent(diff, sum, n, 5.0) || !consistent(a.variance(), b.variance(), n, 5.0) {
        return Err(Error::Calibration(format!(
            "reference (seed {}) is not vacuum-like: Var(A)={:.4}, Var(B)={:.4}, Var(A-B)/Var(A+B)={:.4}",
            r.seed,
            a.variance(),
            b.variance(),
            diff / sum
        )));
    }
    Ok(VacuumLevels { diff, sum })
}

fn check_setting(records: &[TwoModeRecord], want: Option<Quadrature>, what: &str) -> Result<()> {
    for r in records {
        r.check_shape()?;
        if r.setting != want {
            return Err(Error::Mismatch(format!(
                "{what} record has setting {:?}, expected {want:?}",
                r.setting
            )));
        }
    }
    Ok(())
}

/// EPR variances of repeated runs, each normalized to its chain-matched
/// vacuum reference. `vacuum_refs` holds one reference per repetition or a
/// single shared one.
pub fn epr_report(
    x_records: &[TwoModeRecord],
    p_records: &[TwoModeRecord],
    vacuum_refs: &[TwoModeRecord],
    mode: &TemporalMode,
    averaging: DbAveraging,
) -> Result<EprReport> {
    let reps = x_records.len();
    if reps == 0 {
        return Err(Error::param("x_records", "need at least one repetition"));
    }
    if p_records.len() != reps {
        return Err(Error::Mismatch(format!(
            "{reps} x-records but {} p-records",
            p_records.len()
        )));
    }
    if vacuum_refs.len() != 1 && vacuum_refs.len() != reps {
        return Err(Error::Mismatch(format!(
            "need 1 or {reps} vacuum references, got {}",
            vacuum_refs.len()
        )));
    }
    check_setting(x_records, Some(Quadrature::X), "x")?;
    check_setting(p_records, Some(Quadrature::P), "p")?;
    check_setting(vacuum_refs, None, "vacuum")?;
    let fs = x_records[0].sample_rate();
    if let Some(r) = x_records
        .iter()
        .chain(p_records)
        .chain(vacuum_refs)
        .find(|r| r.sample_rate() != fs)
    {
        return Err(Error::Mismatch(format!(
            "sample rate {} Hz differs from {fs} Hz",
            r.sample_rate()
        )));
    }

    let levels = vacuum_refs
        .iter()
        .map(|r| vacuum_levels(r, mode))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(reps);
    let mut correlated = false;
    for (i, (xr, pr)) in x_records.iter().zip(p_records).enumerate() {
        let lv = &levels[if levels.len() == 1 { 0 } else { i }];
        let xa = extract_adjacent(&xr.a, mode)?;
        let xb = extract_adjacent(&xr.b, mode)?;
        let pa = extract_adjacent(&pr.a, mode)?;
        let pb = extract_adjacent(&pr.b, mode)?;
        correlated |= xa.overlapping();
        let var_diff_x = ModeValues::combine(&xa, &xb, -1.0)?.variance() / lv.diff;
        let var_sum_p = ModeValues::combine(&pa, &pb, 1.0)?.variance() / lv.sum;
        rows.push(RepetitionRow {
            index: i,
            var_diff_x,
            var_sum_p,
            var_diff_x_db: to_db(var_diff_x)?,
            var_sum_p_db: to_db(var_sum_p)?,
            duan: duan_sum(var_diff_x, var_sum_p)?,
            modes: xa.count().min(pa.count()),
        });
    }

    let column = |f: fn(&RepetitionRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (x_db, p_db, var_x, var_p) = match averaging {
        DbAveraging::Decibel => {
            let x = Estimate::from_samples(&column(|r| r.var_diff_x_db));
            let p = Estimate::from_samples(&column(|r| r.var_sum_p_db));
            (x, p, from_db(x.mean), from_db(p.mean))
        }
        DbAveraging::Linear => {
            let to_db_est = |e: Estimate| -> Result<Estimate> {
                Ok(Estimate {
                    mean: to_db(e.mean)?,
                    se: e.se.map(|s| 10.0 / std::f64::consts::LN_10 * s / e.mean),
                })
            };
            let x = Estimate::from_samples(&column(|r| r.var_diff_x));
            let p = Estimate::from_samples(&column(|r| r.var_sum_p));
            (to_db_est(x)?, to_db_est(p)?, x.mean, p.mean)
        }
    };
    let duans = column(|r| r.duan);
    Ok(EprReport {
        var_diff_x_db: x_db,
        var_sum_p_db: p_db,
        var_diff_x: var_x,
        var_sum_p: var_p,
        duan: Estimate {
            mean: duan_sum(var_x, var_p)?,
            se: stats::std_error(&duans),
        },
        repetitions: reps,
        modes_per_repetition: rows.iter().map(|r| r.modes).min().unwrap_or(0),
        rows,
        mode: mode.clone(),
        averaging,
        correlated_values: correlated,
        fingerprint: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{OpoParams, Quadrature};
    use crate::synth::{epr_record, vacuum_record};

    fn relabel(mut r: TwoModeRecord, s: Quadrature) -> TwoModeRecord {
        r.setting = Some(s);
        r
    }

    #[test]
    fn vacuum_everywhere_reads_zero_db() {
        let m = TemporalMode::square(0.2e-6).unwrap();
        let xs: Vec<_> = (0..3)
            .map(|i| relabel(vacuum_record(2e-3, 50e6, 10 + i).unwrap(), Quadrature::X))
            .collect();
        let ps: Vec<_> = (0..3)
            .map(|i| relabel(vacuum_record(2e-3, 50e6, 20 + i).unwrap(), Quadrature::P))
            .collect();
        let refs: Vec<_> = (0..3).map(|i| vacuum_record(2e-3, 50e6, 30 + i).unwrap()).collect();
        let r = epr_report(&xs, &ps, &refs, &m, DbAveraging::Decibel).unwrap();
        assert_eq!(r.modes_per_repetition, 10_000);
        // per-repetition dB spread: two independent √(2/N) ratios
        let sigma = 10.0 / std::f64::consts::LN_10 * (4.0f64 / 1e4).sqrt();
        assert!(r.var_diff_x_db.mean.abs() < 4.0 * sigma);
        assert!(r.var_sum_p_db.mean.abs() < 4.0 * sigma);
        assert!((r.duan.mean - 1.0).abs() < 0.05);
        assert_eq!(r.duan.mean, duan_sum(r.var_diff_x, r.var_sum_p).unwrap());
    }

    #[test]
    fn single_repetition_has_no_se() {
        let m = TemporalMode::square(0.2e-6).unwrap();
        let x = relabel(vacuum_record(200e-6, 50e6, 1).unwrap(), Quadrature::X);
        let p = relabel(vacuum_record(200e-6, 50e6, 2).unwrap(), Quadrature::P);
        let v = vacuum_record(200e-6, 50e6, 3).unwrap();
        let r = epr_report(&[x], &[p], &[v], &m, DbAveraging::Linear).unwrap();
        assert!(r.var_diff_x_db.se.is_none() && r.duan.se.is_none());
        assert_eq!(r.repetitions, 1);
    }

    #[test]
    fn squeezed_reference_is_rejected() {
        let m = TemporalMode::square(0.2e-6).unwrap();
        let o1 = OpoParams::new(0.4, 7e6, 0.9, Quadrature::P).unwrap();
        let o2 = OpoParams::new(0.4, 7e6, 0.9, Quadrature::X).unwrap();
        let x = epr_record(&o1, &o2, 500e-6, 200e6, Quadrature::X, 1).unwrap();
        let p = epr_record(&o1, &o2, 500e-6, 200e6, Quadrature::P, 2).unwrap();
        let mut fake = x.clone();
        fake.setting = None;
        let err = epr_report(
            std::slice::from_ref(&x),
            std::slice::from_ref(&p),
            &[fake],
            &m,
            DbAveraging::Decibel,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Calibration(_)), "{err}");
        let v = vacuum_record(500e-6, 50e6, 3).unwrap();
        assert!(matches!(
            epr_report(
                std::slice::from_ref(&x),
                std::slice::from_ref(&p),
                &[v],
                &m,
                DbAveraging::Decibel
            ),
            Err(Error::Mismatch(_))
        ));
        assert!(matches!(
            epr_report(
                std::slice::from_ref(&x),
                std::slice::from_ref(&x),
                &[],
                &m,
                DbAveraging::Decibel
            ),
            Err(Error::Mismatch(_))
        ));
    }
}
