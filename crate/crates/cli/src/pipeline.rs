//! Synthesize → detect → analyze for the repetitions of one configuration.

use std::f64::consts::FRAC_1_SQRT_2;

use eprsim::analysis::{
    correlation_diagram, epr_report, extract_adjacent, trace_excerpt, welch_psd_multi, CorrelationDiagram, EprReport,
    Psd, TraceRow,
};
use eprsim::detection::{calibrate, detect};
use eprsim::synth::stream_seed;
use eprsim::{epr_record, Label, Quadrature, TimeSeries, TwoModeRecord};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Detected records of one repetition and its chain-matched vacuum.
#[derive(Debug, Clone)]
pub struct Repetition {
    pub x: TwoModeRecord,
    pub p: TwoModeRecord,
    pub vacuum: TwoModeRecord,
}

/// Repetition `i` runs from seed `seed + i`.
pub fn repetition_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

pub fn simulate_repetition(cfg: &RunConfig, i: usize) -> Result<Repetition> {
    let s = repetition_seed(cfg.seed, i);
    let record = |q: Quadrature, synth: u64, noise: u64| -> Result<TwoModeRecord> {
        let r = epr_record(&cfg.opo1, &cfg.opo2, cfg.duration, cfg.fs, q, stream_seed(s, synth))
            .map_err(CliError::stage("synthesize"))?;
        detect(&r, &cfg.chain, stream_seed(s, noise)).map_err(CliError::stage("detect"))
    };
    let x = record(Quadrature::X, 101, 102)?;
    let p = record(Quadrature::P, 103, 104)?;
    let vacuum =
        calibrate(&cfg.chain, cfg.duration, cfg.fs, stream_seed(s, 105)).map_err(CliError::stage("calibrate"))?;
    Ok(Repetition { x, p, vacuum })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EPR_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config("EPR_THREADS", format!("expected a positive integer, got `{v}`")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::config("EPR_THREADS", e.to_string()))
}

/// All repetitions, in index order regardless of scheduling.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<Repetition>> {
    let pool = thread_pool()?;
    pool.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|i| simulate_repetition(cfg, i))
            .collect()
    })
}

/// `(a + sign·b)/√2` sample by sample.
pub fn combine_series(r: &TwoModeRecord, sign: f64) -> Result<TimeSeries> {
    let samples =
        r.a.samples
            .iter()
            .zip(&r.b.samples)
            .map(|(a, b)| FRAC_1_SQRT_2 * (a + sign * b))
            .collect();
    TimeSeries::new(r.sample_rate(), samples, Label::Unassigned).map_err(CliError::stage("analyze"))
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: EprReport,
    /// Welch spectrum of `(x_A - x_B)/√2` relative to the vacuum reference.
    pub psd_diff_x: Psd,
    /// Welch spectrum of `(p_A + p_B)/√2` relative to the vacuum reference.
    pub psd_sum_p: Psd,
    pub diagram_x: CorrelationDiagram,
    pub diagram_p: CorrelationDiagram,
    pub trace_x: Vec<TraceRow>,
    pub trace_p: Vec<TraceRow>,
}

fn relative_psd(
    cfg: &RunConfig,
    reps: &[Repetition],
    pick: fn(&Repetition) -> &TwoModeRecord,
    sign: f64,
) -> Result<Psd> {
    let stage = || CliError::stage("spectrum");
    let sig: Vec<TimeSeries> = reps
        .iter()
        .map(|r| combine_series(pick(r), sign))
        .collect::<Result<_>>()?;
    let vac: Vec<TimeSeries> = reps
        .iter()
        .map(|r| combine_series(&r.vacuum, sign))
        .collect::<Result<_>>()?;
    let sig = welch_psd_multi(&sig.iter().collect::<Vec<_>>(), &cfg.analysis.welch).map_err(stage())?;
    let vac = welch_psd_multi(&vac.iter().collect::<Vec<_>>(), &cfg.analysis.welch).map_err(stage())?;
    sig.relative_to(&vac).map_err(stage())
}

pub fn analyze(cfg: &RunConfig, reps: &[Repetition]) -> Result<RunResult> {
    let stage = CliError::stage;
    let xs: Vec<_> = reps.iter().map(|r| r.x.clone()).collect();
    let ps: Vec<_> = reps.iter().map(|r| r.p.clone()).collect();
    let vs: Vec<_> = reps.iter().map(|r| r.vacuum.clone()).collect();
    let mut report = epr_report(&xs, &ps, &vs, &cfg.mode, cfg.analysis.averaging).map_err(stage("analyze"))?;
    report.fingerprint = Some(cfg.fingerprint());

    let modes = |r: &TwoModeRecord| -> Result<_> {
        Ok((
            extract_adjacent(&r.a, &cfg.mode).map_err(stage("analyze"))?,
            extract_adjacent(&r.b, &cfg.mode).map_err(stage("analyze"))?,
        ))
    };
    let (xa, xb) = modes(&reps[0].x)?;
    let (pa, pb) = modes(&reps[0].p)?;
    let rows = cfg.analysis.trace_rows.min(xa.count());
    Ok(RunResult {
        report,
        psd_diff_x: relative_psd(cfg, reps, |r| &r.x, -1.0)?,
        psd_sum_p: relative_psd(cfg, reps, |r| &r.p, 1.0)?,
        diagram_x: correlation_diagram(&xa, &xb).map_err(stage("analyze"))?,
        diagram_p: correlation_diagram(&pa, &pb).map_err(stage("analyze"))?,
        trace_x: trace_excerpt(&xa, &xb, rows).map_err(stage("analyze"))?,
        trace_p: trace_excerpt(&pa, &pb, rows).map_err(stage("analyze"))?,
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    log::info!("simulating {} repetition(s)", cfg.repetitions);
    let reps = simulate(cfg)?;
    log::info!("analyzing");
    analyze(cfg, &reps)
}
