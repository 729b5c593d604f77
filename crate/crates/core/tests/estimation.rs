//! Forward-generated fixtures run through residuals, fits and harmonic analysis.

use djtransmon::circuit::DeviceParams;
use djtransmon::estimator::{
    fit_device_parameters, fit_harmonic_content, forward_table, model_discrepancy_report, residuals, EcMode, FitSpec,
    FreeParam,
};
use djtransmon::hilbert::ChargeBasis;
use djtransmon::models::{flux_grid, harmonic_spectrum, HarmonicSpec, ModelKind, Truncation};
use djtransmon::specfit::{TransitionLabel, TransitionRow, TransitionTable};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const QUBIT_PAIR: [TransitionLabel; 2] = [TransitionLabel::F01, TransitionLabel::F02];

fn noisy(table: &TransitionTable, sigma: f64, seed: u64) -> TransitionTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    let rows = table.rows().iter().map(|r| TransitionRow { freq_ghz: r.freq_ghz + n.sample(&mut rng), ..*r });
    TransitionTable::new(rows.collect()).unwrap()
}

fn free(p: &DeviceParams, names: &[&str], scale: f64) -> Vec<FreeParam> {
    names
        .iter()
        .map(|n| {
            let v = djtransmon::estimator::fit::get_param(p, n).unwrap();
            FreeParam { name: n.to_string(), init: v * scale, bounds: [0.5 * v, 1.5 * v] }
        })
        .collect()
}

#[test]
fn reduced_model_misses_a_two_mode_table_by_over_100_mhz() {
    let p = DeviceParams::cd2();
    let trunc = Truncation::default().with_nc(10);
    let grid = flux_grid(0.0, 0.45, 6).unwrap();
    let table = forward_table(&p, &grid, &QUBIT_PAIR, ModelKind::TwoMode, &trunc).unwrap();
    let own = residuals(&p, &table, ModelKind::TwoMode, &trunc).unwrap();
    assert!(own.mean_abs().unwrap() < 1e-9);
    let reduced = residuals(&p, &table, ModelKind::Reduced, &trunc).unwrap();
    assert!(reduced.mean_abs().unwrap() > 0.1, "{:?}", reduced.mean_abs());
}

#[test]
fn discrepancy_report_orders_the_models() {
    let p = DeviceParams::cd2();
    let trunc = Truncation::default().with_nc(10);
    let grid = flux_grid(0.0, 0.45, 10).unwrap();
    let clean = forward_table(&p, &grid, &QUBIT_PAIR, ModelKind::TwoMode, &trunc).unwrap();
    let report = model_discrepancy_report(&p, &noisy(&clean, 6e-3, 3), &trunc).unwrap();
    let mean = |m| report.summary(m).unwrap().mean_abs_residual_ghz.unwrap();
    let (two, bo, red) = (mean(ModelKind::TwoMode), mean(ModelKind::BornOppenheimer), mean(ModelKind::Reduced));
    assert!(two < 8e-3, "two-mode {two}");
    assert!(two < bo && bo < red, "{two} {bo} {red}");
    // BO error grows toward half flux.
    let bo_res = &report.residuals[1];
    let near = |lo: f64, hi: f64| {
        let v: Vec<f64> = bo_res
            .rows
            .iter()
            .filter(|r| (lo..=hi).contains(&r.row.flux_phi0))
            .filter_map(|r| r.residual_ghz.map(f64::abs))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(near(0.35, 0.45) > near(0.0, 0.1));
}

#[test]
fn near_noiseless_fit_is_identifiable() {
    let p = DeviceParams::cd2();
    let trunc = Truncation::default().with_nc(10);
    let grid = flux_grid(0.0, 0.45, 10).unwrap();
    let clean = forward_table(&p, &grid, &QUBIT_PAIR, ModelKind::TwoMode, &trunc).unwrap();
    let spec = FitSpec {
        model: ModelKind::TwoMode,
        transitions: QUBIT_PAIR.to_vec(),
        free: free(&p, &["EJ1_GHz", "EJA_GHz", "EJB_GHz"], 1.03),
        fixed: Default::default(),
        truncation: Some(trunc),
    };
    let rep = fit_device_parameters(&spec, &p, &noisy(&clean, 1e-6, 5)).unwrap();
    for (f, t) in rep.free.iter().zip([p.ej1, p.eja, p.ejb]) {
        assert!((f.value / t - 1.0).abs() < 1e-4, "{} = {} vs {t}", f.name, f.value);
    }
    assert!(rep.errors_reliable);
}

#[test]
fn resonator_coupled_fit_converges_on_its_own_fixture() {
    let p = DeviceParams::cd1();
    let trunc = Truncation::default().with_nc(8).with_nf(6);
    let labels = [TransitionLabel::F01, TransitionLabel::F02, TransitionLabel::Fres];
    let grid = flux_grid(0.0, 0.4, 5).unwrap();
    let table = forward_table(&p, &grid, &labels, ModelKind::TwoModeWithResonator, &trunc).unwrap();
    let spec = FitSpec {
        model: ModelKind::TwoModeWithResonator,
        transitions: labels.to_vec(),
        free: free(&p, &["EJ1_GHz", "EJA_GHz", "EJB_GHz", "C_fF", "CJ1_fF", "CJA_fF", "CJB_fF"], 1.01),
        fixed: Default::default(),
        truncation: Some(trunc),
    };
    let rep = fit_device_parameters(&spec, &p, &table).unwrap();
    assert_eq!(rep.excluded_rows, 0);
    assert!(rep.mean_abs_residual_ghz < 1e-4, "{}", rep.mean_abs_residual_ghz);
    assert!(rep.residuals.rows.iter().any(|r| r.row.label == TransitionLabel::Fres));
}

fn harmonic_lines(spec: &HarmonicSpec, basis: ChargeBasis) -> Vec<f64> {
    let s = harmonic_spectrum(spec, basis).unwrap();
    (1..=4).map(|k| s.f0k_over_k(k).unwrap()).collect()
}

#[test]
fn pure_cosine_has_no_higher_harmonics() {
    let basis = ChargeBasis::new(15).unwrap();
    let lines = harmonic_lines(&HarmonicSpec { e_c: 0.25, u: vec![15.0] }, basis);
    let fit = fit_harmonic_content(&lines, 4, EcMode::Fixed(0.25), basis).unwrap();
    assert!(fit.content.c[1..].iter().all(|c| c.abs() < 1e-6), "{:?}", fit.content.c);
}

#[test]
fn second_harmonic_under_megahertz_noise() {
    let basis = ChargeBasis::new(15).unwrap();
    let truth = HarmonicSpec { e_c: 0.25, u: [1.0, 0.015, 0.011, 0.005].iter().map(|u| 15.0 * u).collect() };
    let lines = harmonic_lines(&truth, basis);
    let sigma = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = Normal::new(0.0, sigma).unwrap();
    let c2: Vec<f64> = (0..100)
        .map(|_| {
            let y: Vec<f64> = lines.iter().map(|f| f + n.sample(&mut rng)).collect();
            fit_harmonic_content(&y, 4, EcMode::Fixed(0.25), basis).unwrap().content.c[1]
        })
        .collect();
    let mean = c2.iter().sum::<f64>() / c2.len() as f64;
    let spread = (c2.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (c2.len() - 1) as f64).sqrt();
    assert!((mean - 0.015).abs() <= 0.005, "mean {mean}");

    // Linear propagation through the square system: dU = J⁻¹ dy, c₂ = U₂/U₁.
    let h = 1e-4;
    let jac = DMatrix::from_fn(4, 4, |row, col| {
        let mut t = truth.clone();
        t.u[col] += h;
        harmonic_lines(&t, basis)[row] / h - lines[row] / h
    });
    let inv = jac.try_inverse().unwrap();
    let (u1, u2) = (truth.u[0], truth.u[1]);
    let grad = (inv.row(1) - inv.row(0) * (u2 / u1)) / u1;
    let predicted = sigma * grad.norm();
    assert!((spread / predicted - 1.0).abs() < 0.25, "spread {spread} vs propagated {predicted}");
}
