//! CSV emitters. Every table may start with a `# config_fingerprint=<hex>`
//! comment line; the header row follows.

use std::io::Write;

use super::{CorrelationDiagram, EprReport, Psd, TraceRow};
use crate::error::Result;

fn preamble<W: Write>(w: &mut W, fingerprint: Option<&str>, header: &str) -> Result<()> {
    if let Some(fp) = fingerprint {
        writeln!(w, "# config_fingerprint={fp}")?;
    }
    writeln!(w, "{header}")?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `report.csv`: one row per repetition, then a `summary` row carrying the
/// means and standard errors (`NA` when unavailable).
pub fn write_report<W: Write>(r: &EprReport, mut w: W) -> Result<()> {
    preamble(
        &mut w,
        r.fingerprint.as_deref(),
        "row,var_diff_x_db,var_diff_x_db_se,var_sum_p_db,var_sum_p_db_se,duan,duan_se,modes",
    )?;
    for row in &r.rows {
        writeln!(
            w,
            "{},{},,{},,{},,{}",
            row.index, row.var_diff_x_db, row.var_sum_p_db, row.duan, row.modes
        )?;
    }
    writeln!(
        w,
        "summary,{},{},{},{},{},{},{}",
        r.var_diff_x_db.mean,
        opt(r.var_diff_x_db.se),
        r.var_sum_p_db.mean,
        opt(r.var_sum_p_db.se),
        r.duan.mean,
        opt(r.duan.se),
        r.modes_per_repetition
    )?;
    w.flush()?;
    Ok(())
}

/// `psd.csv`: `freq_hz,db`.
pub fn write_psd<W: Write>(psd: &Psd, fingerprint: Option<&str>, mut w: W) -> Result<()> {
    preamble(&mut w, fingerprint, "freq_hz,db")?;
    for (f, db) in psd.freq_hz.iter().zip(psd.db()) {
        writeln!(w, "{f},{db}")?;
    }
    w.flush()?;
    Ok(())
}

/// `psd.csv` for analytic spectra given as (frequency, dB) pairs.
pub fn write_psd_table<W: Write>(rows: &[(f64, f64)], fingerprint: Option<&str>, mut w: W) -> Result<()> {
    preamble(&mut w, fingerprint, "freq_hz,db")?;
    for (f, db) in rows {
        writeln!(w, "{f},{db}")?;
    }
    w.flush()?;
    Ok(())
}

/// `diagram.csv`: `a,b`.
pub fn write_diagram<W: Write>(d: &CorrelationDiagram, fingerprint: Option<&str>, mut w: W) -> Result<()> {
    preamble(&mut w, fingerprint, "a,b")?;
    for (a, b) in &d.pairs {
        writeln!(w, "{a},{b}")?;
    }
    w.flush()?;
    Ok(())
}

/// `trace.csv`: `index,a,b`.
pub fn write_trace<W: Write>(rows: &[TraceRow], fingerprint: Option<&str>, mut w: W) -> Result<()> {
    preamble(&mut w, fingerprint, "index,a,b")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.index, r.a, r.b)?;
    }
    w.flush()?;
    Ok(())
}
