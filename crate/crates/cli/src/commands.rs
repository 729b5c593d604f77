//! Subcommand bodies. Inputs are validated before any output is written.

use std::path::Path;
use std::str::FromStr;

use djtransmon::circuit::{energies_bo, lambda_and_sigma, DeviceParams, EnergyRoute, FluxBias};
use djtransmon::dispersive::{chi_sweep, write_chi_csv, DispersiveConfig};
use djtransmon::estimator::{
    fit_device_parameters, fit_harmonic_content, model_discrepancy_report, potential_fourier_raw, EcMode, FitSpec,
    HarmonicContent,
};
use djtransmon::fmt::{opt_sig9, sig9};
use djtransmon::models::{bo_potential, flux_grid, reduced_potential, sweep, write_sweep_csv, ModelKind, Truncation};
use djtransmon::specfit::{extract_transitions, load_scan, ExtractionConfig, TransitionTable};
use djtransmon::{Error, Result};

use crate::output::OutDir;
use crate::{Common, FluxArgs};

/// Names the file in I/O errors, which otherwise carry only the OS message.
fn read<T>(path: &Path, load: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
    load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn load_params(common: &Common) -> Result<DeviceParams> {
    let path = common.params.as_ref().ok_or_else(|| Error::Config("--params is required".into()))?;
    read(path, |p| DeviceParams::load(p))
}

fn truncation(common: &Common, base: Truncation) -> Truncation {
    let mut t = base;
    if let Some(nc) = common.nc {
        t = t.with_nc(nc);
    }
    if let Some(nf) = common.nf {
        t = t.with_nf(nf);
    }
    t
}

fn grid(flux: &FluxArgs) -> Result<Vec<f64>> {
    let [start, stop, count] = flux.flux.as_slice() else {
        return Err(Error::Config("--flux START STOP COUNT is required".into()));
    };
    let num = |name: &str, s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("--flux {name} '{s}' is not a number")));
    let count: usize = count.parse().map_err(|_| Error::Config(format!("--flux COUNT '{count}' is not a positive integer")))?;
    flux_grid(num("START", start)?, num("STOP", stop)?, count)
}

pub fn spectrum(common: &Common, flux: &FluxArgs, models: &[String]) -> Result<()> {
    let params = load_params(common)?;
    params.validate()?;
    let fluxes = grid(flux)?;
    let kinds = models.iter().map(|m| ModelKind::from_str(m.trim())).collect::<Result<Vec<_>>>()?;
    if let Some(k) = kinds.iter().find(|k| **k == ModelKind::HarmonicTransmon) {
        return Err(Error::Config(format!("model '{k}' has no flux dependence; use the harmonics command")));
    }
    let trunc = truncation(common, Truncation::default());
    let mut tables = vec![];
    for kind in kinds {
        let rows = sweep(kind, &params, &fluxes, &trunc).into_iter().collect::<Result<Vec<_>>>()?;
        tables.push((kind, rows));
    }
    let out = OutDir::create(&common.out)?;
    for (kind, rows) in tables {
        let path = out.write(&format!("spectrum_{}.csv", kind.as_str().replace('-', "_")), |w| write_sweep_csv(w, &rows))?;
        println!("{}: {} rows", path.display(), rows.len());
    }
    Ok(())
}

pub fn chi(common: &Common, flux: &FluxArgs, delta_min: Option<f64>) -> Result<()> {
    let params = load_params(common)?;
    params.validate()?;
    let fluxes = grid(flux)?;
    let mut cfg = DispersiveConfig::default();
    if let Some(d) = delta_min {
        if !(d >= 0.0) {
            return Err(Error::Config("--delta-min must be non-negative".into()));
        }
        cfg.delta_min = d;
    }
    let rows = chi_sweep(&params, &fluxes, &truncation(common, Truncation::default()), &cfg)?;
    let out = OutDir::create(&common.out)?;
    let path = out.write("chi.csv", |w| write_chi_csv(w, &rows))?;
    let flagged = rows.iter().filter(|r| r.flagged()).count();
    println!("{}: {} rows, {flagged} flagged", path.display(), rows.len());
    Ok(())
}

pub fn analyze(common: &Common, scan: &Path, config: &Path) -> Result<()> {
    let scan = read(scan, |p| load_scan(p))?;
    if scan.is_empty() {
        return Err(Error::Config("scan has no data rows".into()));
    }
    let config = read(config, |p| ExtractionConfig::load(p))?;
    let res = extract_transitions(&scan, &config)?;
    let out = OutDir::create(&common.out)?;
    let path = out.write("transitions.csv", |w| res.table.write_csv(w))?;
    out.write("extraction_failures.csv", |w| res.write_failures_csv(w))?;
    println!("{}: {} lines, {} failed cells", path.display(), res.table.len(), res.failures.len());
    Ok(())
}

pub fn fit(common: &Common, table: &Path, spec: &Path) -> Result<()> {
    let base = load_params(common)?;
    let mut spec = read(spec, |p| FitSpec::load(p))?;
    spec.truncation = Some(truncation(common, spec.truncation()));
    let table = read(table, |p| TransitionTable::load(p))?;
    let report = fit_device_parameters(&spec, &base, &table)?;
    let trunc = spec.truncation();
    let has_qubit_rows = table.rows().iter().any(|r| r.label.qubit_level().is_some());
    let discrepancy = if has_qubit_rows { Some(model_discrepancy_report(&report.params, &table, &trunc)?) } else { None };
    let out = OutDir::create(&common.out)?;
    out.write_str("fit_report.json", &report.to_json_string()?)?;
    out.write_str("fitted_params.json", &report.params.to_json_string())?;
    out.write("fit_residuals.csv", |w| report.write_residuals_csv(w))?;
    if let Some(d) = &discrepancy {
        out.write("discrepancy_summary.csv", |w| d.write_summary_csv(w))?;
        out.write("discrepancy_residuals.csv", |w| d.write_residuals_csv(w))?;
        out.write("alpha.csv", |w| d.write_alpha_csv(w))?;
    }
    println!(
        "{}: {} free parameters, mean |residual| {} MHz, {} iterations",
        out.path("fit_report.json").display(),
        report.free.len(),
        sig9(report.mean_abs_residual_ghz * 1e3),
        report.iterations
    );
    for p in &report.free {
        println!("  {} = {} ± {}", p.name, sig9(p.value), opt_sig9(p.std_error));
    }
    Ok(())
}

pub struct HarmonicsArgs {
    pub lines: Vec<f64>,
    pub ec: Option<f64>,
    pub free_ec: bool,
    pub harmonics: usize,
    pub model: Option<String>,
    pub lambda: Option<f64>,
}

pub fn harmonics(common: &Common, flux: &FluxArgs, args: &HarmonicsArgs) -> Result<()> {
    if !args.lines.is_empty() {
        harmonics_fit(common, args)
    } else if args.lambda.is_some() || !flux.flux.is_empty() {
        harmonics_potential(common, flux, args)
    } else {
        Err(Error::Config("give --lines for fit mode, or --flux or --lambda for potential mode".into()))
    }
}

fn harmonics_fit(common: &Common, args: &HarmonicsArgs) -> Result<()> {
    let ec = args.ec.ok_or_else(|| Error::Config("fit mode needs --ec".into()))?;
    let mode = if args.free_ec { EcMode::Free(ec) } else { EcMode::Fixed(ec) };
    let basis = truncation(common, Truncation::default()).charge_basis()?;
    let fit = fit_harmonic_content(&args.lines, args.harmonics, mode, basis)?;
    let out = OutDir::create(&common.out)?;
    let path = out.write("harmonics.csv", |w| fit.content.write_csv(w))?;
    out.write_str("harmonics_fit.json", &serde_json::to_string_pretty(&fit)?)?;
    println!("{}: E_C = {} GHz, c = [{}]", path.display(), sig9(fit.e_c), fit.content.c.iter().map(|c| sig9(*c)).collect::<Vec<_>>().join(", "));
    Ok(())
}

const VANISHING_FUNDAMENTAL: f64 = 1e-12;

/// Writes c_k normalized to c₁ and the raw coefficients. A flat potential
/// (λ = 0) has no fundamental, so its normalized columns stay empty.
fn harmonics_potential(common: &Common, flux: &FluxArgs, args: &HarmonicsArgs) -> Result<()> {
    let kmax = args.harmonics;
    let rows: Vec<(Option<f64>, f64, Vec<f64>)> = match args.lambda {
        Some(lambda) => {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::Config(format!("--lambda {lambda} outside [0, 1]")));
            }
            match args.model.as_deref().map(ModelKind::from_str).transpose()? {
                None | Some(ModelKind::Reduced) => {}
                Some(m) => return Err(Error::Config(format!("--lambda sets the reduced potential shape; model '{m}' needs --params and --flux"))),
            }
            let v = move |phi: f64| -(1.0 - lambda * (phi / 2.0).sin().powi(2)).sqrt();
            vec![(None, lambda, potential_fourier_raw(&v, kmax)?)]
        }
        None => {
            let params = load_params(common)?;
            params.validate()?;
            let kind = ModelKind::from_str(args.model.as_deref().unwrap_or("bo"))?;
            let ecint = energies_bo(&params, EnergyRoute::MatrixInverse)?.ecint;
            let mut rows = vec![];
            for f in grid(flux)? {
                let squid = params.squid(FluxBias::from_phi0(f));
                let squid = lambda_and_sigma(params.ej1, squid.ej2);
                let raw = match kind {
                    ModelKind::Reduced => potential_fourier_raw(&|p| reduced_potential(p, &squid), kmax)?,
                    ModelKind::BornOppenheimer => potential_fourier_raw(&|p| bo_potential(p, &squid, ecint), kmax)?,
                    other => return Err(Error::Config(format!("potential mode supports bo and reduced, not '{other}'"))),
                };
                rows.push((Some(f), squid.lambda, raw));
            }
            rows
        }
    };
    let out = OutDir::create(&common.out)?;
    let path = out.write("harmonics_potential.csv", |w| {
        let mut header = vec!["phi_e_phi0".to_string(), "lambda".into()];
        header.extend((1..=kmax).map(|k| format!("c_{k}")));
        header.extend((1..=kmax).map(|k| format!("raw_{k}_GHz")));
        writeln!(w, "{}", header.join(","))?;
        for (f, lambda, raw) in &rows {
            let scale = raw.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            let norm = if raw[0].abs() > VANISHING_FUNDAMENTAL * scale.max(1.0) { HarmonicContent::from_raw(raw.clone()).ok() } else { None };
            let mut rec = vec![opt_sig9(*f), sig9(*lambda)];
            rec.extend((0..kmax).map(|k| opt_sig9(norm.as_ref().map(|n| n.c[k]))));
            rec.extend(raw.iter().map(|c| sig9(*c)));
            writeln!(w, "{}", rec.join(","))?;
        }
        Ok(())
    })?;
    println!("{}: {} rows", path.display(), rows.len());
    Ok(())
}
