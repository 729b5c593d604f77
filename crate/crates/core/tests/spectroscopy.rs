//! Scan handling and line extraction on synthetic data.

use djtransmon::circuit::DeviceParams;
use djtransmon::estimator::forward_table;
use djtransmon::models::{ModelKind, Truncation};
use djtransmon::specfit::{
    average_over_amplitude, extract_transitions, synthetic_scan, ExtractionConfig, SynthOptions, TransitionLabel,
    TransitionWindow, TwoToneScan,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn averaging_reduces_white_noise_by_root_m() {
    let (nf, na, nq) = (2, 16, 2000);
    let sigma = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = Normal::new(0.0, sigma).unwrap();
    let response: Vec<f64> = (0..nf * na * nq).map(|_| 1.0 + n.sample(&mut rng)).collect();
    let amp: Vec<f64> = (1..=na).map(|a| a as f64 / na as f64).collect();
    let scan = TwoToneScan::new(vec![0.0, 0.5], amp, (0..nq).map(|i| 4.0 + 1e-4 * i as f64).collect(), response).unwrap();
    let trace = average_over_amplitude(&scan, 1, (0.0, 1.0)).unwrap();
    assert_eq!(trace.amp_rows, na);
    let mean = trace.values.iter().sum::<f64>() / nq as f64;
    let sd = (trace.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nq - 1) as f64).sqrt();
    let expect = sigma / (na as f64).sqrt();
    assert!((sd / expect - 1.0).abs() < 0.2, "{sd} vs {expect}");
}

fn scan_from(p: &DeviceParams, fluxes: &[f64], seed: u64) -> (TwoToneScan, djtransmon::specfit::TransitionTable) {
    let truth = forward_table(p, fluxes, &TransitionLabel::QUBIT, ModelKind::TwoMode, &Truncation::default().with_nc(10)).unwrap();
    let lo = truth.rows().iter().map(|r| r.freq_ghz).fold(f64::MAX, f64::min) - 0.05;
    let hi = truth.rows().iter().map(|r| r.freq_ghz).fold(f64::MIN, f64::max) + 0.05;
    let freq: Vec<f64> = (0..).map(|i| lo + 0.5e-3 * i as f64).take_while(|f| *f <= hi).collect();
    let opts = SynthOptions { noise_frac: 0.05, seed, ..SynthOptions::default() };
    (synthetic_scan(&truth, fluxes, &[0.25, 0.5, 0.75, 1.0], &freq, &opts).unwrap(), truth)
}

#[test]
fn three_flux_fixture_has_the_expected_shape() {
    let (scan, _) = scan_from(&DeviceParams::cd2(), &[0.0, 0.1, 0.2], 1);
    let (nf, na, nq) = scan.shape();
    assert_eq!((nf, na), (3, 4));
    assert_eq!(nq, scan.freq().len());
    let mut buf = vec![];
    scan.write_csv(&mut buf).unwrap();
    assert_eq!(TwoToneScan::read_csv(buf.as_slice()).unwrap().shape(), (3, 4, nq));
}

#[test]
fn only_configured_lines_are_tabulated_near_half_flux() {
    let p = DeviceParams::cd2();
    let fluxes = [0.48, 0.5];
    let (scan, truth) = scan_from(&p, &fluxes, 2);
    let windows = fluxes
        .iter()
        .flat_map(|&f| {
            [TransitionLabel::F01, TransitionLabel::F02].map(|label| {
                let c = truth.get(f, label).unwrap().freq_ghz;
                TransitionWindow {
                    label,
                    divisor: Some(label.divisor()),
                    freq_window: [c - 0.015, c + 0.015],
                    amp_window: None,
                    flux_window: Some([f - 1e-9, f + 1e-9]),
                }
            })
        })
        .collect();
    let res = extract_transitions(&scan, &ExtractionConfig { transitions: windows }).unwrap();
    assert!(res.failures.is_empty(), "{:?}", res.failures);
    for f in fluxes {
        let labels: Vec<_> = res.table.rows().iter().filter(|r| r.flux_phi0 == f).map(|r| r.label).collect();
        assert_eq!(labels.len(), 2);
        for r in res.table.rows().iter().filter(|r| r.flux_phi0 == f) {
            assert!((r.freq_ghz - truth.get(f, r.label).unwrap().freq_ghz).abs() < 0.3e-3);
        }
    }
}
