mod common;

use common::*;
use eprsim::analysis::{
    correlation_diagram, epr_report, extract_adjacent, welch_psd, DbAveraging, ModeValues, WelchConfig,
};
use eprsim::detection::{detect, DetectionChain};
use eprsim::spectra::Branch;
use eprsim::{
    duan_sum, epr_record, filtered_variance, opo_spectrum, synthesize_colored, vacuum_record, OpoParams, Quadrature,
    TemporalMode, TwoModeRecord,
};

const FS: f64 = 200e6;

fn swapped(r: &TwoModeRecord) -> TwoModeRecord {
    TwoModeRecord {
        a: r.b.clone(),
        b: r.a.clone(),
        ..r.clone()
    }
}

#[test]
fn relabeling_beams_keeps_variances() {
    let (p_opo, x_opo) = reference_pair();
    let m = TemporalMode::square(T_REF).unwrap();
    let x = epr_record(&p_opo, &x_opo, 1e-3, FS, Quadrature::X, 1).unwrap();
    let p = epr_record(&p_opo, &x_opo, 1e-3, FS, Quadrature::P, 2).unwrap();
    let v = vacuum_record(1e-3, FS, 3).unwrap();
    let r1 = epr_report(
        std::slice::from_ref(&x),
        std::slice::from_ref(&p),
        std::slice::from_ref(&v),
        &m,
        DbAveraging::Decibel,
    )
    .unwrap();
    let r2 = epr_report(&[swapped(&x)], &[swapped(&p)], &[swapped(&v)], &m, DbAveraging::Decibel).unwrap();
    assert!((r1.var_diff_x - r2.var_diff_x).abs() < 1e-12);
    assert!((r1.var_sum_p - r2.var_sum_p).abs() < 1e-12);
    assert_eq!(r1.duan.mean, duan_sum(r1.var_diff_x, r1.var_sum_p).unwrap());
}

#[test]
fn blocked_x_opo_leaves_only_p_squeezing() {
    let p_opo = OpoParams::new(0.5, HWHM, 1.0, Quadrature::P).unwrap();
    let x_opo = OpoParams::new(0.0, HWHM, 1.0, Quadrature::X).unwrap();
    let m = TemporalMode::square(T_REF).unwrap();
    let sp = filtered_variance(&opo_spectrum(&p_opo, Branch::Squeezed).unwrap(), &m).unwrap();
    let reps = 10;
    let xs: Vec<_> = (0..reps)
        .map(|i| epr_record(&p_opo, &x_opo, 2e-3, FS, Quadrature::X, i).unwrap())
        .collect();
    let ps: Vec<_> = (0..reps)
        .map(|i| epr_record(&p_opo, &x_opo, 2e-3, FS, Quadrature::P, 100 + i).unwrap())
        .collect();
    let vac: Vec<_> = (0..reps).map(|i| vacuum_record(2e-3, FS, 200 + i).unwrap()).collect();
    let r = epr_report(&xs, &ps, &vac, &m, DbAveraging::Linear).unwrap();
    let x_db = r.var_diff_x_db;
    assert!(x_db.mean.abs() < 3.0 * x_db.se.unwrap(), "{x_db:?}");
    let duans: Vec<f64> = r.rows.iter().map(|row| row.duan).collect();
    let (_, se) = mean_se(&duans);
    assert!(
        (r.duan.mean - 0.5 * (1.0 + sp)).abs() < 3.0 * se,
        "{} vs {}",
        r.duan.mean,
        0.5 * (1.0 + sp)
    );
}

#[test]
fn diagram_signs_follow_setting() {
    let (p_opo, x_opo) = reference_pair();
    let m = TemporalMode::square(T_REF).unwrap();
    let chain = DetectionChain::default();
    let r = |q, seed| {
        let rec = detect(&epr_record(&p_opo, &x_opo, 2e-3, FS, q, seed).unwrap(), &chain, seed).unwrap();
        let a = extract_adjacent(&rec.a, &m).unwrap();
        let b = extract_adjacent(&rec.b, &m).unwrap();
        assert_eq!(a.count(), 10_000);
        correlation_diagram(&a, &b).unwrap().pearson
    };
    let rx = r(Quadrature::X, 1);
    let rp = r(Quadrature::P, 2);
    assert!(rx > 0.3, "{rx}");
    assert!(rp < -0.3, "{rp}");
}

#[test]
fn welch_tracks_generating_spectrum() {
    let (_, x_opo) = reference_pair();
    let psd = opo_spectrum(&x_opo, Branch::Squeezed).unwrap();
    let s = synthesize_colored(&psd, 1 << 21, FS, 17).unwrap();
    let est = welch_psd(&s, &WelchConfig::default()).unwrap();
    assert!(est.segments >= 100);
    let mut bins = 0;
    for (f, p) in est.band(50e3, 5e6) {
        let err = 10.0 * (p / psd.density(f)).log10();
        assert!(err.abs() < 0.5, "{f} Hz: {err} dB");
        bins += 1;
    }
    assert!(bins > 50);
}

#[test]
fn overlapping_stride_values_are_correlated_but_unbiased() {
    let v = vacuum_record(2e-3, 50e6, 5).unwrap();
    let m = TemporalMode::square(T_REF).unwrap();
    let over = eprsim::analysis::extract_modes(&v.a, &m, 0.1e-6).unwrap();
    let adj = extract_adjacent(&v.a, &m).unwrap();
    assert!(over.overlapping() && !adj.overlapping());
    assert_eq!(over.count(), 2 * adj.count() - 1);
    assert!((over.variance() - adj.variance()).abs() < 0.05);
    let c = ModeValues::combine(&adj, &adj, 1.0).unwrap();
    assert!((c.variance() - 2.0 * adj.variance()).abs() < 1e-9);
}
