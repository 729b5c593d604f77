//! Invariants checked over randomized inputs.

use djtransmon::circuit::{lambda_and_sigma, squid_effective_ej, DeviceParams, FluxBias};
use djtransmon::estimator::{fit_device_parameters, forward_table, potential_fourier, FitSpec, FreeParam};
use djtransmon::fmt::sig9;
use djtransmon::hilbert::ChargeBasis;
use djtransmon::lsq::{least_squares, Bounds, LsqOptions};
use djtransmon::models::{build_bo, build_reduced, build_two_mode, flux_grid, ModelKind, Truncation};
use djtransmon::specfit::{average_over_amplitude, fit_lorentzian, lorentzian, TransitionLabel, TransitionTable, TwoToneScan};
use proptest::prelude::*;

fn cheap(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn device() -> impl Strategy<Value = DeviceParams> {
    (20.0..60.0, 10.0..40.0, 2.0..8.0, 5.0..30.0, 2.0..8.0, 5.0..30.0, 2.0..8.0, 0.0..5.0)
        .prop_map(|(c, ej1, cj1, eja, cja, ejb, cjb, cg)| DeviceParams { c, ej1, cj1, eja, cja, ejb, cjb, cg, ..DeviceParams::cd2() })
}

proptest! {
    #[test]
    fn lambda_is_bounded_and_symmetric(a in 0.0..100.0f64, b in 0.0..100.0f64) {
        let (x, y) = (lambda_and_sigma(a, b), lambda_and_sigma(b, a));
        prop_assert!((0.0..=1.0).contains(&x.lambda));
        prop_assert!((x.lambda - y.lambda).abs() < 1e-15);
        prop_assert_eq!(x.ej_sigma, y.ej_sigma);
    }

    #[test]
    fn squid_is_periodic_and_even(a in 1.0..50.0f64, b in 1.0..50.0f64, f in -2.0..2.0f64, m in -3i32..3) {
        let e = squid_effective_ej(a, b, FluxBias::from_phi0(f));
        prop_assert!((squid_effective_ej(a, b, FluxBias::from_phi0(f + m as f64)) - e).abs() < 1e-9 * e.max(1.0));
        prop_assert!((squid_effective_ej(a, b, FluxBias::from_phi0(-f)) - e).abs() < 1e-9 * e.max(1.0));
        prop_assert!(e <= a + b + 1e-12 && e >= (a - b).abs() - 1e-9);
    }

    #[test]
    fn flux_grid_hits_both_endpoints(start in -1.0..1.0f64, stop in -1.0..1.0f64, n in 2usize..200) {
        let g = flux_grid(start, stop, n).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g[0], start);
        prop_assert_eq!(g[n - 1], stop);
    }

    #[test]
    fn nine_digit_formatting_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = sig9(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs(), "{} -> {}", x, sig9(x));
    }

    #[test]
    fn fourier_coefficients_are_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, lam in 0.1..0.99f64) {
        let f = move |p: f64| -(1.0 - lam * (p / 2.0).sin().powi(2)).sqrt();
        let g = |p: f64| -p.cos() + 0.3 * (2.0 * p).cos();
        let fa = potential_fourier(&f, 3).unwrap().raw.unwrap();
        let ga = potential_fourier(&g, 3).unwrap().raw.unwrap();
        let combo = move |p: f64| a * f(p) + b * g(p);
        if let Ok(s) = potential_fourier(&combo, 3) {
            let s = s.raw.unwrap();
            for k in 0..3 {
                prop_assert!((s[k] - (a * fa[k] + b * ga[k])).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn second_harmonic_grows_with_lambda(l1 in 0.05..0.98f64, l2 in 0.05..0.98f64) {
        prop_assume!((l1 - l2).abs() > 1e-3);
        let ratio = |lam: f64| {
            let c = potential_fourier(&move |p: f64| -(1.0 - lam * (p / 2.0).sin().powi(2)).sqrt(), 2).unwrap();
            c.c[1].abs()
        };
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(ratio(lo) < ratio(hi));
    }

    #[test]
    fn averaging_commutes_with_scaling(
        values in prop::collection::vec(-5.0..5.0f64, 2 * 4 * 6),
        factor in -10.0..10.0f64,
        lo in 0.0..0.5f64,
    ) {
        let scan = TwoToneScan::new(vec![0.0, 0.1], vec![0.1, 0.2, 0.4, 0.8], (0..6).map(|i| 4.0 + 0.01 * i as f64).collect(), values).unwrap();
        for fi in 0..2 {
            let a = average_over_amplitude(&scan.scaled(factor), fi, (lo, 1.0)).unwrap();
            let b = average_over_amplitude(&scan, fi, (lo, 1.0)).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - factor * y).abs() < 1e-12 * (1.0 + y.abs() * factor.abs()));
            }
        }
    }

    #[test]
    fn scan_csv_round_trips(values in prop::collection::vec(-1e3..1e3f64, 3 * 2 * 5)) {
        let scan = TwoToneScan::new(vec![-0.2, 0.0, 0.31], vec![0.05, 1.0], vec![4.0, 4.001, 4.5, 5.0, 7.25], values).unwrap();
        let mut buf = vec![];
        scan.write_csv(&mut buf).unwrap();
        prop_assert_eq!(TwoToneScan::read_csv(buf.as_slice()).unwrap(), scan);
    }

    #[test]
    fn transition_csv_round_trips(freqs in prop::collection::vec(0.1..20.0f64, 1..12)) {
        let rows = freqs.iter().enumerate().map(|(i, f)| djtransmon::specfit::TransitionRow {
            flux_phi0: 0.01 * i as f64,
            label: TransitionLabel::F01,
            freq_ghz: *f,
            err_ghz: 0.0,
        });
        let t = TransitionTable::new(rows.collect()).unwrap();
        let mut buf = vec![];
        t.write_csv(&mut buf).unwrap();
        let back = TransitionTable::read_csv(buf.as_slice()).unwrap();
        for (a, b) in back.rows().iter().zip(t.rows()) {
            prop_assert!((a.freq_ghz - b.freq_ghz).abs() <= 5e-9 * b.freq_ghz);
            prop_assert_eq!(a.label, b.label);
        }
    }
}

proptest! {
    #![proptest_config(cheap(24))]

    #[test]
    fn hamiltonians_are_hermitian(p in device(), f in -0.5..0.5f64) {
        let basis = ChargeBasis::new(5).unwrap();
        let flux = FluxBias::from_phi0(f);
        for h in [build_two_mode(&p, flux, basis, None), build_bo(&p, flux, basis, 10), build_reduced(&p, flux, basis, 10)] {
            prop_assert!(h.unwrap().hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn lorentzian_fit_is_invariant_under_affine_response(scale in 0.2..50.0f64, shift in -5.0..5.0f64, f0 in 4.98..5.02f64) {
        let freq: Vec<f64> = (0..81).map(|i| 4.95 + 0.00125 * i as f64).collect();
        let y: Vec<f64> = freq.iter().map(|f| lorentzian(*f, f0, 0.004, 1.0, 0.1)).collect();
        let z: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        let a = fit_lorentzian(&freq, &y, None).unwrap();
        let b = fit_lorentzian(&freq, &z, None).unwrap();
        prop_assert!((a.f0 - b.f0).abs() < 1e-7 && (a.gamma - b.gamma).abs() < 1e-7);
        prop_assert!((b.amplitude - scale * a.amplitude).abs() < 1e-6 * scale);
        prop_assert!((b.offset - (scale * a.offset + shift)).abs() < 1e-6 * (scale + shift.abs()));
    }

    #[test]
    fn lm_cost_never_increases(a in 0.5..3.0f64, k in 0.2..2.0f64, x0 in prop::array::uniform2(0.1..4.0f64)) {
        let t: Vec<f64> = (0..20).map(|i| 0.2 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| a * (-k * t).exp()).collect();
        let rep = least_squares(
            |x: &[f64]| Ok(t.iter().zip(&y).map(|(t, y)| x[0] * (-x[1] * t).exp() - y).collect()),
            &x0,
            &Bounds::default(),
            &LsqOptions::default(),
        ).unwrap();
        prop_assert!(rep.cost_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((rep.x[0] - a).abs() < 1e-6 && (rep.x[1] - k).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(cheap(4))]

    #[test]
    fn fit_does_not_depend_on_row_order(perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        let truth = DeviceParams::cd2();
        let trunc = Truncation::default().with_nc(8);
        let fluxes = [0.0, 0.1, 0.2, 0.3, 0.4, 0.45];
        let labels = [TransitionLabel::F01, TransitionLabel::F02];
        let table = forward_table(&truth, &fluxes, &labels, ModelKind::Reduced, &trunc).unwrap();
        let shuffled = TransitionTable::new(perm.iter().map(|&i| table.rows()[i]).collect()).unwrap();
        let spec = FitSpec {
            model: ModelKind::Reduced,
            transitions: labels.to_vec(),
            free: vec![FreeParam { name: "EJ1_GHz".into(), init: truth.ej1 * 1.05, bounds: [5.0, 80.0] }],
            fixed: Default::default(),
            truncation: Some(trunc),
        };
        let a = fit_device_parameters(&spec, &truth, &table).unwrap();
        let b = fit_device_parameters(&spec, &truth, &shuffled).unwrap();
        prop_assert_eq!(a.params, b.params);
        prop_assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        prop_assert!((a.params.ej1 - truth.ej1).abs() < 1e-6 * truth.ej1);
    }
}
