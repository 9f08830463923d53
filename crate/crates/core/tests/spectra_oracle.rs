mod common;

use std::f64::consts::PI;

use common::*;
use eprsim::modeopt::mode_duan;
use eprsim::spectra::{from_db, Branch};
use eprsim::{duan_sum, epr_spectra, filtered_variance, opo_spectrum, to_db, OpoParams, Quadrature, TemporalMode};
use proptest::prelude::*;

fn sinc2(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        (u.sin() / u).powi(2)
    }
}

/// Brute-force trapezoid of `2∫₀^F (S−1)·T·sinc²(πfT) df` on 10⁶ points,
/// plus one for the flat part.
fn dense_trapezoid(x: f64, eta: f64, hwhm: f64, t: f64) -> f64 {
    let n = 1_000_000;
    let top = 100.0 * hwhm;
    let h = top / n as f64;
    let g = |f: f64| (squeezed_density(x, eta, hwhm, f) - 1.0) * t * sinc2(PI * f * t);
    let inner: f64 = (1..n).map(|k| g(k as f64 * h)).sum();
    1.0 + 2.0 * h * (0.5 * g(0.0) + inner + 0.5 * g(top))
}

#[test]
fn reference_variance_matches_dense_trapezoid() {
    let (p_opo, x_opo) = reference_pair();
    let mode = TemporalMode::square(T_REF).unwrap();
    for opo in [p_opo, x_opo] {
        let quad = filtered_variance(&opo_spectrum(&opo, Branch::Squeezed).unwrap(), &mode).unwrap();
        let brute = dense_trapezoid(opo.pump_param, opo.efficiency, opo.hwhm, T_REF);
        assert!((quad - brute).abs() < 1e-6 * brute, "{quad} vs {brute}");
    }
}

#[test]
fn calibrated_pair_hits_targets() {
    let (p_opo, x_opo) = reference_pair();
    let s = epr_spectra(&p_opo, &x_opo).unwrap();
    let mode = TemporalMode::square(T_REF).unwrap();
    let vx = filtered_variance(&s.diff_x, &mode).unwrap();
    let vp = filtered_variance(&s.sum_p, &mode).unwrap();
    assert!((to_db(vx).unwrap() + 3.30).abs() < 1e-6);
    assert!((to_db(vp).unwrap() + 3.74).abs() < 1e-6);
    let d = duan_sum(vx, vp).unwrap();
    assert!((d - 0.5 * (0.4677 + 0.4227)).abs() < 1e-3, "{d}");
}

#[test]
fn db_examples() {
    assert!((to_db(0.4677).unwrap() + 3.30).abs() < 5e-3);
    assert!((to_db(0.5).unwrap() + 3.0103).abs() < 1e-4);
    assert!((from_db(-3.74) - 0.4227).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heisenberg_product(x in 0.0f64..0.99, eta in 0.0f64..=1.0, f in 0.0f64..1e9) {
        let p = OpoParams::new(x, HWHM, eta, Quadrature::X).unwrap();
        let s = opo_spectrum(&p, Branch::Squeezed).unwrap().density(f);
        let a = opo_spectrum(&p, Branch::Antisqueezed).unwrap().density(f);
        prop_assert!(s * a >= 1.0 - 1e-12);
        prop_assert!((0.0..=1.0).contains(&s) && a >= 1.0);
    }

    #[test]
    fn squeezing_deepens_with_efficiency(x in 0.0f64..0.99, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0, f in 0.0f64..1e8) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let s = |eta| {
            let p = OpoParams::new(x, HWHM, eta, Quadrature::P).unwrap();
            opo_spectrum(&p, Branch::Squeezed).unwrap().density(f)
        };
        prop_assert!(s(hi) <= s(lo));
    }

    #[test]
    fn sinc_weight_normalized(log_t in (10e-9f64).ln()..(10e-6f64).ln()) {
        // Simpson over 4000 sinc lobes plus the averaged 1/f² tail.
        let t = log_t.exp();
        let m = TemporalMode::square(t).unwrap();
        let lobes = 4000.0;
        let top = lobes / t;
        let n = 400_000;
        let h = top / n as f64;
        let mut acc = m.spectral_weight(0.0) + m.spectral_weight(top);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * m.spectral_weight(k as f64 * h);
        }
        let half = acc * h / 3.0 + 1.0 / (2.0 * PI * PI * lobes);
        prop_assert!((2.0 * half - 1.0).abs() < 1e-6, "{}", 2.0 * half);
    }

    #[test]
    fn pumped_pairs_are_entangled(
        x1 in 0.01f64..0.95,
        x2 in 0.01f64..0.95,
        eta in 0.05f64..=1.0,
        t in 0.05e-6f64..1e-6,
    ) {
        let s = epr_spectra(
            &OpoParams::new(x1, HWHM, eta, Quadrature::P).unwrap(),
            &OpoParams::new(x2, HWHM, eta, Quadrature::X).unwrap(),
        ).unwrap();
        let d = mode_duan(&s, &TemporalMode::square(t).unwrap()).unwrap();
        prop_assert!(d < 1.0);
        prop_assert!(s.satisfies_uncertainty(&[0.0, 1e5, 1e6, 7e6, 3e7, 1e9]));
    }
}
