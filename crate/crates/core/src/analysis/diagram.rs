use super::modes::ModeValues;
use crate::error::{Error, Result};
use crate::stats;

/// Paired mode values of the two output beams.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDiagram {
    pub pairs: Vec<(f64, f64)>,
    pub pearson: f64,
}

pub fn correlation_diagram(a: &ModeValues, b: &ModeValues) -> Result<CorrelationDiagram> {
    if a.count() != b.count() {
        return Err(Error::Mismatch(format!("{} vs {} mode values", a.count(), b.count())));
    }
    if a.count() < 2 {
        return Err(Error::param("values", "need at least two pairs"));
    }
    Ok(CorrelationDiagram {
        pairs: a.values.iter().copied().zip(b.values.iter().copied()).collect(),
        pearson: stats::pearson(&a.values, &b.values),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    /// Start of the window, seconds.
    pub time_s: f64,
    pub a: f64,
    pub b: f64,
}

/// First `n` paired values for time-resolved plots.
pub fn trace_excerpt(a: &ModeValues, b: &ModeValues, n: usize) -> Result<Vec<TraceRow>> {
    let available = a.count().min(b.count());
    if n > available {
        return Err(Error::param(
            "n",
            format!("requested {n} rows but only {available} values exist"),
        ));
    }
    let stride = a.stride();
    Ok((0..n)
        .map(|i| TraceRow {
            index: i,
            time_s: i as f64 * stride,
            a: a.values[i],
            b: b.values[i],
        })
        .collect())
}
