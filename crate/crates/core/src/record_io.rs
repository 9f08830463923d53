//! Raw series export.
//!
//! Binary layout, all little-endian:
//!
//! | offset | type     | content                 |
//! |--------|----------|-------------------------|
//! | 0      | [u8; 4]  | magic `EPRT`            |
//! | 4      | u32      | format version (1)      |
//! | 8      | f64      | sample rate, Hz         |
//! | 16     | u64      | sample count `n`        |
//! | 24     | f64 × n  | samples, vacuum units   |
//!
//! The CSV form has header `time_s,value`, one row per sample, with values
//! printed in shortest round-trip notation. Neither form carries the
//! quadrature label; series read back are [`Label::Unassigned`].

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::synth::{Label, TimeSeries};

pub const MAGIC: [u8; 4] = *b"EPRT";
pub const VERSION: u32 = 1;

pub fn write_binary<W: Write>(series: &TimeSeries, mut w: W) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&series.sample_rate.to_le_bytes())?;
    w.write_all(&(series.samples.len() as u64).to_le_bytes())?;
    for x in &series.samples {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<TimeSeries> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)?;
    if head[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let fs = f64::from_le_bytes(head[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut buf = vec![
        0u8;
        n.checked_mul(8)
            .ok_or_else(|| Error::Format("length overflow".into()))?
    ];
    r.read_exact(&mut buf)?;
    let samples = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TimeSeries::new(fs, samples, Label::Unassigned)
}

pub fn write_csv<W: Write>(series: &TimeSeries, mut w: W) -> Result<()> {
    writeln!(w, "time_s,value")?;
    let dt = series.dt();
    for (i, x) in series.samples.iter().enumerate() {
        writeln!(w, "{},{}", i as f64 * dt, x)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `time_s,value` table; the sample rate is recovered from the first
/// time step.
pub fn read_csv<R: BufRead>(r: R) -> Result<TimeSeries> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "time_s,value" => {}
        _ => return Err(Error::Format("missing `time_s,value` header".into())),
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("row {}: expected two columns", i + 2)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", i + 2)))
        };
        times.push(parse(t)?);
        samples.push(parse(v)?);
    }
    if times.len() < 2 {
        return Err(Error::Format("need at least two rows to infer the sample rate".into()));
    }
    let fs = (times[1] - times[0]).recip();
    TimeSeries::new(fs, samples, Label::Unassigned)
}
