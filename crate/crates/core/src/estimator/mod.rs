//! Parameter estimation and model comparison against transition tables.

pub mod fit;
pub mod harmonics;
pub mod report;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::{DeviceParams, FluxBias};
use crate::error::{Error, Result};
use crate::fmt::{opt_sig9, sig9};
use crate::models::{spectrum, ModelKind, SpectrumResult, Truncation};
use crate::specfit::{TransitionLabel, TransitionRow, TransitionTable};

pub use fit::{fit_device_parameters, FitReport, FitSpec, FreeParam};
pub use harmonics::{fit_harmonic_content, potential_fourier, potential_fourier_raw, EcMode, HarmonicContent, HarmonicFit};
pub use report::{model_discrepancy_report, DiscrepancyReport, ModelSummary};

/// Model prediction for one table row, or why there is none.
pub fn model_value(result: &SpectrumResult, label: TransitionLabel) -> Option<f64> {
    match label.qubit_level() {
        Some(k) => result.f0k_over_k(k),
        None => result.f_res,
    }
}

/// Residual of one row; `residual` is None when the model failed there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub row: TransitionRow,
    pub model_ghz: Option<f64>,
    pub residual_ghz: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub model: ModelKind,
    pub rows: Vec<ResidualRow>,
}

impl Residuals {
    /// Residuals of the rows the model could evaluate, in table order.
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.residual_ghz).collect()
    }

    pub fn excluded(&self) -> usize {
        self.rows.iter().filter(|r| r.residual_ghz.is_none()).count()
    }

    pub fn mean_abs(&self) -> Option<f64> {
        let v = self.values();
        (!v.is_empty()).then(|| v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_residual_rows(out, std::slice::from_ref(self))
    }
}

pub const RESIDUAL_CSV_HEADER: [&str; 7] = ["phi_e_phi0", "label", "model", "data_GHz", "model_GHz", "residual_GHz", "failure"];

pub(crate) fn write_residual_rows<W: Write>(out: W, sets: &[Residuals]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESIDUAL_CSV_HEADER)?;
    for set in sets {
        for r in &set.rows {
            w.write_record([
                sig9(r.row.flux_phi0),
                r.row.label.to_string(),
                set.model.to_string(),
                sig9(r.row.freq_ghz),
                opt_sig9(r.model_ghz),
                opt_sig9(r.residual_ghz),
                r.failure.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn check_labels(kind: ModelKind, table: &TransitionTable) -> Result<()> {
    if kind == ModelKind::HarmonicTransmon {
        return Err(Error::Config("the harmonic transmon is not a flux model".into()));
    }
    if kind != ModelKind::TwoModeWithResonator && table.rows().iter().any(|r| r.label == TransitionLabel::Fres) {
        return Err(Error::Config(format!("model {kind} has no resonator; drop fres rows or use two-mode-resonator")));
    }
    Ok(())
}

/// Spectra at each distinct flux of the table, evaluated in parallel.
pub(crate) fn spectra_by_flux(
    params: &DeviceParams,
    table: &TransitionTable,
    kind: ModelKind,
    trunc: &Truncation,
) -> BTreeMap<u64, Result<SpectrumResult>> {
    let fluxes = table.fluxes();
    let results = crate::par_map(&fluxes, |&f| spectrum(kind, params, FluxBias::from_phi0(f), trunc));
    fluxes.iter().map(|f| f.to_bits()).zip(results).collect()
}

/// Model minus data per row, with f₀ₖ/k compared directly. Rows where the
/// model fails are kept with a reason and no residual.
pub fn residuals(params: &DeviceParams, table: &TransitionTable, kind: ModelKind, trunc: &Truncation) -> Result<Residuals> {
    if table.is_empty() {
        return Err(Error::Config("transition table is empty".into()));
    }
    check_labels(kind, table)?;
    params.validate()?;
    let spectra = spectra_by_flux(params, table, kind, trunc);
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            let (model, failure) = match &spectra[&row.flux_phi0.to_bits()] {
                Ok(s) => match model_value(s, row.label) {
                    Some(v) if v.is_finite() => (Some(v), None),
                    _ => (None, Some(format!("{} not identified in the {kind} spectrum", row.label))),
                },
                Err(e) => (None, Some(e.to_string())),
            };
            ResidualRow { row: *row, model_ghz: model, residual_ghz: model.map(|m| m - row.freq_ghz), failure }
        })
        .collect();
    Ok(Residuals { model: kind, rows })
}

/// Noise-free table of the requested lines on a flux grid.
pub fn forward_table(
    params: &DeviceParams,
    fluxes_phi0: &[f64],
    labels: &[TransitionLabel],
    kind: ModelKind,
    trunc: &Truncation,
) -> Result<TransitionTable> {
    let results = crate::models::sweep(kind, params, fluxes_phi0, trunc);
    let mut table = TransitionTable::default();
    for (&f, res) in fluxes_phi0.iter().zip(results) {
        let s = res?;
        for &label in labels {
            let v = model_value(&s, label)
                .ok_or_else(|| Error::Numeric(format!("{label} not identified in the {kind} spectrum at Φe = {f}")))?;
            table.push(TransitionRow { flux_phi0: f, label, freq_ghz: v, err_ghz: 0.0 })?;
        }
    }
    Ok(table)
}
