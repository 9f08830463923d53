//! The `spectra`, `run`, `sweep`, `optimize` and `calibrate` verbs. Each
//! returns the rendered files plus a short human-readable summary.

use eprsim::analysis::export;
use eprsim::modeopt::{self, log_grid, mode_duan, Evaluation, FamilyKind, OptResult};
use eprsim::spectra::{calibrate_pump, from_db};
use eprsim::{filtered_variance, to_db, EprSpectra, Quadrature, TemporalMode};

use crate::config::{RunConfig, SweepConfig, SweepVariable};
use crate::error::{CliError, Result};
use crate::output::{cell, opt_cell, Outputs, Table};
use crate::pipeline::{self, RunResult};

pub struct Completed {
    pub outputs: Outputs,
    pub summary: String,
}

fn decade_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let points = ((hi / lo).log10() * per_decade as f64).ceil() as usize + 1;
    log_grid(lo, hi, points.max(2))
}

fn numeric(stage: &'static str) -> impl FnOnce(eprsim::Error) -> CliError {
    CliError::stage(stage)
}

/// Filtered EPR variances and the Duan sum for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub var_diff_x: f64,
    pub var_sum_p: f64,
    pub duan: f64,
}

pub fn variance_row(s: &EprSpectra, mode: &TemporalMode) -> Result<VarianceRow> {
    let var_diff_x = filtered_variance(&s.diff_x, mode).map_err(numeric("quadrature"))?;
    let var_sum_p = filtered_variance(&s.sum_p, mode).map_err(numeric("quadrature"))?;
    Ok(VarianceRow {
        var_diff_x,
        var_sum_p,
        duan: eprsim::duan_sum(var_diff_x, var_sum_p).map_err(numeric("quadrature"))?,
    })
}

fn db(v: f64) -> Result<f64> {
    to_db(v).map_err(numeric("quadrature"))
}

/// Analytic spectra of both EPR combinations and the filtered-variance
/// table over a mode-duration grid. No random numbers are drawn.
pub fn spectra(cfg: &RunConfig) -> Result<Completed> {
    let fp = cfg.fingerprint();
    let s = cfg.epr_spectra()?;
    let sp = &cfg.spectra;
    let freqs = decade_grid(sp.f_min, sp.f_max, sp.f_points_per_decade);
    let mut outputs = Outputs::new();
    for (name, psd) in [("psd.csv", &s.diff_x), ("psd_sum_p.csv", &s.sum_p)] {
        let rows: Vec<(f64, f64)> = freqs
            .iter()
            .map(|&f| Ok((f, db(psd.density(f))?)))
            .collect::<Result<_>>()?;
        outputs.render(name, |w| export::write_psd_table(&rows, Some(&fp), w))?;
    }

    let mut table = Table::new(
        &fp,
        &[
            "t_s",
            "var_diff_x",
            "var_diff_x_db",
            "var_sum_p",
            "var_sum_p_db",
            "duan",
        ],
    );
    let mut best: Option<(f64, f64)> = None;
    for t in decade_grid(sp.t_min, sp.t_max, sp.t_points_per_decade) {
        let mode = cfg
            .mode
            .with_duration(t)
            .map_err(|e| CliError::config("mode.kind", e.to_string()))?;
        let r = variance_row(&s, &mode)?;
        table.row(&[
            cell(t),
            cell(r.var_diff_x),
            cell(db(r.var_diff_x)?),
            cell(r.var_sum_p),
            cell(db(r.var_sum_p)?),
            cell(r.duan),
        ]);
        if best.is_none_or(|(_, d)| r.duan < d) {
            best = Some((t, r.duan));
        }
    }
    outputs.add("variances.csv", table.into_bytes());

    let at = variance_row(&s, &cfg.mode)?;
    let (bt, bd) = best.expect("non-empty grid");
    let summary = format!(
        "configured mode ({}, T = {:e} s): diff-x {:.3} dB, sum-p {:.3} dB, duan {:.4}\nbest on T grid: T = {bt:.4e} s, duan {bd:.4}",
        cfg.mode.kind_name(),
        cfg.mode.duration(),
        db(at.var_diff_x)?,
        db(at.var_sum_p)?,
        at.duan
    );
    Ok(Completed { outputs, summary })
}

pub fn render_run(cfg: &RunConfig, r: &RunResult) -> Result<Outputs> {
    let fp = cfg.fingerprint();
    let fp = Some(fp.as_str());
    let mut o = Outputs::new();
    o.render("report.csv", |w| export::write_report(&r.report, w))?;
    o.render("psd.csv", |w| export::write_psd(&r.psd_diff_x, fp, w))?;
    o.render("psd_sum_p.csv", |w| export::write_psd(&r.psd_sum_p, fp, w))?;
    o.render("diagram.csv", |w| export::write_diagram(&r.diagram_x, fp, w))?;
    o.render("diagram_p.csv", |w| export::write_diagram(&r.diagram_p, fp, w))?;
    o.render("trace.csv", |w| export::write_trace(&r.trace_x, fp, w))?;
    o.render("trace_p.csv", |w| export::write_trace(&r.trace_p, fp, w))?;
    Ok(o)
}

fn pm(e: &eprsim::analysis::Estimate, digits: usize, unit: &str) -> String {
    match e.se {
        Some(se) => format!("{:.*} ± {:.*}{unit}", digits, e.mean, digits, se),
        None => format!("{:.*}{unit} (no SE, single repetition)", digits, e.mean),
    }
}

pub fn run(cfg: &RunConfig) -> Result<(Completed, RunResult)> {
    let r = pipeline::run(cfg)?;
    let outputs = render_run(cfg, &r)?;
    let rep = &r.report;
    let mut summary = format!(
        "{} repetition(s), {} modes each\nVar(x_A - x_B): {}\nVar(p_A + p_B): {}\nDuan sum: {} (separable bound {})\nPearson r: x {:.3}, p {:.3}",
        rep.repetitions,
        rep.modes_per_repetition,
        pm(&rep.var_diff_x_db, 3, " dB"),
        pm(&rep.var_sum_p_db, 3, " dB"),
        pm(&rep.duan, 4, ""),
        rep.separable_bound(),
        r.diagram_x.pearson,
        r.diagram_p.pearson,
    );
    if rep.correlated_values {
        summary.push_str("\nnote: overlapping windows, standard errors are optimistic");
    }
    Ok((Completed { outputs, summary }, r))
}

fn sweep_config(cfg: &RunConfig, var: SweepVariable, v: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    match var {
        SweepVariable::T => {
            c.mode = cfg
                .mode
                .with_duration(v)
                .map_err(|e| CliError::config("mode.kind", e.to_string()))?;
        }
        SweepVariable::PumpParam => {
            c.opo1.pump_param = v;
            c.opo2.pump_param = v;
        }
        SweepVariable::Efficiency => {
            c.opo1.efficiency = v;
            c.opo2.efficiency = v;
        }
    }
    Ok(c)
}

fn check_sweep(cfg: &RunConfig, sw: &SweepConfig) -> Result<()> {
    let (lo, hi) = (sw.min, sw.max);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::config(
            "sweep.max",
            format!("need min <= max, got [{lo}, {hi}]"),
        ));
    }
    if sw.points < 2 {
        return Err(CliError::config("sweep.points", "need at least 2 points"));
    }
    let ok = match sw.variable {
        SweepVariable::T => lo > 0.0 && hi <= cfg.duration,
        SweepVariable::PumpParam => lo >= 0.0 && hi < 1.0,
        SweepVariable::Efficiency => lo >= 0.0 && hi <= 1.0,
    };
    if !ok {
        let range = match sw.variable {
            SweepVariable::T => format!("(0, {}] s", cfg.duration),
            SweepVariable::PumpParam => "[0, 1)".into(),
            SweepVariable::Efficiency => "[0, 1]".into(),
        };
        return Err(CliError::config(
            "sweep.min",
            format!("{} grid [{lo}, {hi}] leaves {range}", sw.variable.column()),
        ));
    }
    if sw.log && lo <= 0.0 {
        return Err(CliError::config("sweep.log", "log spacing needs min > 0"));
    }
    Ok(())
}

fn sweep_grid(sw: &SweepConfig) -> Vec<f64> {
    if sw.log {
        log_grid(sw.min, sw.max, sw.points)
    } else {
        (0..sw.points)
            .map(|k| sw.min + (sw.max - sw.min) * k as f64 / (sw.points - 1) as f64)
            .collect()
    }
}

/// Analytic Duan sum along one parameter, with optional Monte Carlo runs at
/// the two grid endpoints.
pub fn sweep(cfg: &RunConfig, sw: &SweepConfig) -> Result<Completed> {
    check_sweep(cfg, sw)?;
    let fp = cfg.fingerprint();
    let grid = sweep_grid(sw);
    let mut table = Table::new(
        &fp,
        &[
            sw.variable.column(),
            "var_diff_x_db",
            "var_sum_p_db",
            "duan",
            "mc_duan",
            "mc_duan_se",
        ],
    );
    let mut summary = Vec::new();
    for (k, &v) in grid.iter().enumerate() {
        let c = sweep_config(cfg, sw.variable, v)?;
        let s = c.epr_spectra()?;
        let r = variance_row(&s, &c.mode)?;
        let (mut mc, mut mc_se) = (None, None);
        if sw.monte_carlo && (k == 0 || k + 1 == grid.len()) {
            c.validate()?;
            let res = pipeline::run(&c)?;
            mc = Some(res.report.duan.mean);
            mc_se = res.report.duan.se;
            summary.push(format!(
                "{} = {v:e}: analytic duan {:.4}, Monte Carlo (detected) {}",
                sw.variable.column(),
                r.duan,
                pm(&res.report.duan, 4, "")
            ));
        }
        table.row(&[
            cell(v),
            cell(db(r.var_diff_x)?),
            cell(db(r.var_sum_p)?),
            cell(r.duan),
            opt_cell(mc),
            opt_cell(mc_se),
        ]);
    }
    let mut outputs = Outputs::new();
    outputs.add("sweep.csv", table.into_bytes());
    summary.insert(0, format!("{} points over {}", grid.len(), sw.variable.column()));
    Ok(Completed {
        outputs,
        summary: summary.join("\n"),
    })
}

fn trace_table(fp: &str, names: &[&str], trace: &[Evaluation]) -> Vec<u8> {
    let mut header: Vec<&str> = names.to_vec();
    header.push("duan");
    let mut t = Table::new(fp, &header);
    for e in trace {
        let mut row: Vec<String> = e.params.iter().map(|&p| cell(p)).collect();
        row.push(cell(e.duan));
        t.row(&row);
    }
    t.into_bytes()
}

/// Mode-shape search against the analytic spectra. A bracket failure still
/// yields the evaluation trace, alongside the error.
pub fn optimize(cfg: &RunConfig, family: FamilyKind, budget: usize) -> Result<Completed, (Outputs, CliError)> {
    let mut oc = cfg.optimize.clone();
    oc.family = family;
    oc.budget = budget;
    let fp = cfg.fingerprint();
    let fam = oc.family().map_err(|e| (Outputs::new(), e))?;
    let s = cfg.epr_spectra().map_err(|e| (Outputs::new(), e))?;
    let names = fam.param_names();
    match modeopt::optimize(&s, &fam, budget) {
        Ok(r) => {
            let mut outputs = Outputs::new();
            outputs.add("optimize.csv", trace_table(&fp, names, &r.trace));
            Ok(Completed {
                outputs,
                summary: optimize_summary(&fam.kind, names, &r, &s, &cfg.mode),
            })
        }
        Err(eprsim::Error::Bracket { reason, trace }) => {
            let trace: Vec<Evaluation> = trace
                .into_iter()
                .map(|(params, duan)| Evaluation { params, duan })
                .collect();
            let mut outputs = Outputs::new();
            outputs.add("optimize.csv", trace_table(&fp, names, &trace));
            Err((
                outputs,
                CliError::Numeric {
                    stage: "optimize",
                    source: eprsim::Error::Bracket {
                        reason,
                        trace: Vec::new(),
                    },
                },
            ))
        }
        Err(e) => Err((Outputs::new(), CliError::stage("optimize")(e))),
    }
}

fn optimize_summary(
    kind: &FamilyKind,
    names: &[&str],
    r: &OptResult,
    s: &EprSpectra,
    configured: &TemporalMode,
) -> String {
    let params: Vec<String> = names
        .iter()
        .zip(&r.best_params)
        .map(|(n, v)| format!("{n} = {v:.6e}"))
        .collect();
    let reference = mode_duan(s, configured)
        .map(|d| format!("{d:.6}"))
        .unwrap_or_else(|_| "NA".into());
    format!(
        "family {kind:?}: best duan {:.6} at {} ({} evaluations, {}, oracle: {})\nconfigured {} mode: duan {reference}",
        r.best_duan,
        params.join(", "),
        r.trace.len(),
        if r.converged { "converged" } else { "budget exhausted" },
        r.oracle,
        configured.kind_name()
    )
}

/// Pump parameters that put the analytic diff-x and sum-p variances of the
/// configured mode at the given dB levels. Efficiencies and bandwidths are
/// taken from the configuration.
pub fn calibrate(cfg: &RunConfig, x_db: f64, p_db: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    for opo in [&mut c.opo1, &mut c.opo2] {
        let target = match opo.squeeze_phase {
            Quadrature::X => x_db,
            Quadrature::P => p_db,
        };
        opo.pump_param = calibrate_pump(from_db(target), opo.efficiency, opo.hwhm, &cfg.mode)
            .map_err(|e| CliError::config("calibrate", e.to_string()))?;
    }
    c.validate()?;
    Ok(c)
}
