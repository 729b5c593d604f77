//! Browser bindings. Every entry point takes device parameters as JSON and
//! returns a JSON string, or an error message the page can show as is.

use djtransmon::circuit::{energies_bo, lambda_and_sigma, DeviceParams, EnergyRoute, FluxBias};
use djtransmon::dispersive::{chi_sweep, DispersiveConfig};
use djtransmon::estimator::potential_fourier;
use djtransmon::models::{bo_potential, flux_grid, reduced_potential, sweep, ModelKind, Truncation};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a single call interactive.
pub const MAX_POINTS: usize = 401;
/// Charge cutoff range offered by the page.
pub const NC_RANGE: (usize, usize) = (4, 15);

fn parse_params(json: &str) -> Result<DeviceParams, String> {
    let p = DeviceParams::from_json_str(json).map_err(|e| e.to_string())?;
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn checked_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>, String> {
    if count > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} flux points"));
    }
    flux_grid(start, stop, count).map_err(|e| e.to_string())
}

fn checked_nc(nc: usize) -> Result<Truncation, String> {
    if !(NC_RANGE.0..=NC_RANGE.1).contains(&nc) {
        return Err(format!("charge cutoff must be in {}..={}", NC_RANGE.0, NC_RANGE.1));
    }
    Ok(Truncation::default().with_nc(nc))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Bundled reference parameters, "cd1" or "cd2".
#[wasm_bindgen]
pub fn preset_params(name: &str) -> Result<String, String> {
    match name {
        "cd1" => Ok(DeviceParams::cd1().to_json_string()),
        "cd2" => Ok(DeviceParams::cd2().to_json_string()),
        other => Err(format!("unknown preset '{other}'")),
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    flux: f64,
    /// f₀ₖ/k for k = 1..4; null where a level is missing.
    lines: [Option<f64>; 4],
    alpha: Option<f64>,
}

/// f₀ₖ/k and α over a flux grid for one model.
#[wasm_bindgen]
pub fn flux_spectrum(params_json: &str, model: &str, start: f64, stop: f64, count: usize, nc: usize) -> Result<String, String> {
    let params = parse_params(params_json)?;
    let kind: ModelKind = model.parse().map_err(|e: djtransmon::Error| e.to_string())?;
    if !ModelKind::FLUX_MODELS.contains(&kind) {
        return Err(format!("the demo sweeps two-mode, bo and reduced, not '{kind}'"));
    }
    let fluxes = checked_grid(start, stop, count)?;
    let trunc = checked_nc(nc)?;
    let rows = sweep(kind, &params, &fluxes, &trunc)
        .into_iter()
        .map(|r| {
            r.map(|s| SpectrumRow { flux: s.flux.phi0(), lines: [1, 2, 3, 4].map(|k| s.f0k_over_k(k)), alpha: s.anharmonicity })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    to_json(&rows)
}

#[derive(Serialize)]
struct PotentialView {
    lambda: f64,
    phi: Vec<f64>,
    reduced: Vec<f64>,
    bo: Vec<f64>,
    /// c_k/c₁ for k = 1..4; null when the potential is flat.
    reduced_harmonics: Option<Vec<f64>>,
    bo_harmonics: Option<Vec<f64>>,
}

/// Reduced and BO potentials on [−π, π] at one flux, with their harmonic content.
#[wasm_bindgen]
pub fn effective_potential(params_json: &str, flux: f64, points: usize) -> Result<String, String> {
    let params = parse_params(params_json)?;
    if !(3..=MAX_POINTS * 4).contains(&points) {
        return Err(format!("points must be in 3..={}", MAX_POINTS * 4));
    }
    if !flux.is_finite() {
        return Err("flux must be finite".into());
    }
    let squid = lambda_and_sigma(params.ej1, params.squid(FluxBias::from_phi0(flux)).ej2);
    let ecint = energies_bo(&params, EnergyRoute::MatrixInverse).map_err(|e| e.to_string())?.ecint;
    let phi: Vec<f64> = (0..points).map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (points - 1) as f64).collect();
    let reduced = |p: f64| reduced_potential(p, &squid);
    let bo = |p: f64| bo_potential(p, &squid, ecint);
    let view = PotentialView {
        lambda: squid.lambda,
        reduced: phi.iter().map(|&p| reduced(p)).collect(),
        bo: phi.iter().map(|&p| bo(p)).collect(),
        reduced_harmonics: potential_fourier(&reduced, 4).ok().map(|c| c.c),
        bo_harmonics: potential_fourier(&bo, 4).ok().map(|c| c.c),
        phi,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct ChiPoint {
    flux: f64,
    /// MHz; null on flagged points.
    chi_q: Option<f64>,
    chi_int: Option<f64>,
    chi_0: Option<f64>,
    flag: Option<String>,
}

/// χ_q, χ_int and χ₀ in MHz over a flux grid; breakdown points are flagged.
#[wasm_bindgen]
pub fn dispersive_sweep(params_json: &str, start: f64, stop: f64, count: usize, nc: usize) -> Result<String, String> {
    let params = parse_params(params_json)?;
    let fluxes = checked_grid(start, stop, count)?;
    let trunc = checked_nc(nc)?;
    let rows = chi_sweep(&params, &fluxes, &trunc, &DispersiveConfig::default()).map_err(|e| e.to_string())?;
    let points: Vec<ChiPoint> = rows
        .into_iter()
        .map(|r| ChiPoint {
            flux: r.flux_phi0,
            chi_q: r.result.map(|c| c.chi_q * 1e3),
            chi_int: r.result.map(|c| c.chi_int * 1e3),
            chi_0: r.result.map(|c| c.chi_0 * 1e3),
            flag: r.flag,
        })
        .collect();
    to_json(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cd2() -> String {
        preset_params("cd2").unwrap()
    }

    #[test]
    fn presets_round_trip() {
        assert_eq!(DeviceParams::from_json_str(&cd2()).unwrap(), DeviceParams::cd2());
        assert!(preset_params("cd3").is_err());
    }

    #[test]
    fn spectrum_matches_the_library() {
        let json = flux_spectrum(&cd2(), "two-mode", 0.0, 0.4, 3, 8).unwrap();
        let rows: serde_json::Value = serde_json::from_str(&json).unwrap();
        let direct = sweep(ModelKind::TwoMode, &DeviceParams::cd2(), &[0.2], &Truncation::default().with_nc(8)).remove(0).unwrap();
        assert_eq!(rows[1]["lines"][0].as_f64().unwrap(), direct.f0k_over_k(1).unwrap());
        assert_eq!(rows.as_array().unwrap().len(), 3);
    }

    #[test]
    fn bad_requests_are_messages() {
        assert!(flux_spectrum("{", "two-mode", 0.0, 0.4, 3, 8).is_err());
        assert!(flux_spectrum(&cd2(), "harmonic", 0.0, 0.4, 3, 8).is_err());
        assert!(flux_spectrum(&cd2(), "bo", 0.0, 0.4, MAX_POINTS + 1, 8).is_err());
        assert!(dispersive_sweep(&cd2(), 0.0, 0.4, 3, 40).is_err());
        assert!(effective_potential(&cd2(), f64::NAN, 100).is_err());
    }

    #[test]
    fn potential_view_is_consistent() {
        let v: serde_json::Value = serde_json::from_str(&effective_potential(&cd2(), 0.3, 101).unwrap()).unwrap();
        let (bo, red) = (v["bo"].as_array().unwrap(), v["reduced"].as_array().unwrap());
        assert_eq!(bo.len(), 101);
        // The zero-point term only raises the potential.
        assert!(bo.iter().zip(red).all(|(b, r)| b.as_f64().unwrap() > r.as_f64().unwrap()));
        assert_eq!(v["bo_harmonics"][0].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn chi_points_are_in_megahertz() {
        let v: serde_json::Value = serde_json::from_str(&dispersive_sweep(&preset_params("cd1").unwrap(), 0.0, 0.0, 1, 8).unwrap()).unwrap();
        let q = v[0]["chi_q"].as_f64().unwrap();
        assert!(q > 1.0 && q < 10.0, "{q}");
    }
}
