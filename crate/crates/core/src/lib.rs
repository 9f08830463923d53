//! Simulation of continuous-wave two-mode squeezed vacuum (EPR) beams in the
//! time domain.
//!
//! The pipeline mirrors a homodyne experiment on two sub-threshold OPOs
//! combined at a half beam splitter:
//!
//! * [`spectra`]: analytic OPO and EPR spectra and the temporal-mode filtered
//!   variances they imply (the oracle for everything sampled);
//! * [`synth`]: Gaussian time series with those spectra, in vacuum units;
//! * [`detection`]: detector bandwidth, electronic noise, high-pass and ADC;
//! * [`analysis`]: temporal-mode extraction, vacuum-normalized variances,
//!   Duan sums, Welch spectra and correlation tables;
//! * [`modeopt`]: search over temporal-mode shapes minimizing the Duan sum.

pub mod analysis;
pub mod detection;
mod error;
pub mod mode;
pub mod modeopt;
pub mod quadrature;
pub mod record_io;
pub mod spectra;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use mode::TemporalMode;
pub use spectra::{
    duan_sum, epr_spectra, filtered_variance, opo_spectrum, to_db, Branch, EprSpectra, OpoParams, QuadPsd, Quadrature,
};
pub use synth::{epr_record, synthesize_colored, vacuum_record, Label, TimeSeries, TwoModeRecord};
