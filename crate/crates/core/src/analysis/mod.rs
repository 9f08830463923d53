//! From sampled records to physics: temporal-mode values, vacuum-normalized
//! EPR variances, PSD estimates and correlation tables.

mod diagram;
pub mod export;
mod modes;
mod report;
mod welch;

pub use diagram::{correlation_diagram, trace_excerpt, CorrelationDiagram, TraceRow};
pub use modes::{extract_adjacent, extract_modes, ModeValues};
pub use report::{epr_report, DbAveraging, EprReport, Estimate, RepetitionRow};
pub use welch::{welch_psd, welch_psd_multi, Psd, WelchConfig, Window, MIN_SEGMENT};
