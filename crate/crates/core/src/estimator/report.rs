//! Side-by-side residuals and anharmonicity of the flux models.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{model_value, spectra_by_flux, write_residual_rows, ResidualRow, Residuals};
use crate::circuit::DeviceParams;
use crate::error::{Error, Result};
use crate::fmt::{opt_sig9, sig9};
use crate::models::{ModelKind, Truncation};
use crate::specfit::{TransitionLabel, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub mean_abs_residual_ghz: Option<f64>,
    pub rows_used: usize,
    pub rows_excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub summaries: Vec<ModelSummary>,
    pub residuals: Vec<Residuals>,
    pub fluxes: Vec<f64>,
    /// α(Φe) per model on `fluxes`, in the order of `summaries`.
    pub alpha: Vec<Vec<Option<f64>>>,
}

impl DiscrepancyReport {
    pub fn summary(&self, model: ModelKind) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == model)
    }

    pub fn alpha_of(&self, model: ModelKind) -> Option<&[Option<f64>]> {
        self.summaries.iter().position(|s| s.model == model).map(|i| self.alpha[i].as_slice())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "mean_abs_residual_GHz", "rows_used", "rows_excluded"])?;
        for s in &self.summaries {
            w.write_record([s.model.to_string(), opt_sig9(s.mean_abs_residual_ghz), s.rows_used.to_string(), s.rows_excluded.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_residuals_csv<W: Write>(&self, out: W) -> Result<()> {
        write_residual_rows(out, &self.residuals)
    }

    pub fn write_alpha_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["phi_e_phi0".to_string()];
        header.extend(self.summaries.iter().map(|s| format!("alpha_{}_GHz", s.model.as_str().replace('-', "_"))));
        w.write_record(&header)?;
        for (i, f) in self.fluxes.iter().enumerate() {
            let mut rec = vec![sig9(*f)];
            rec.extend(self.alpha.iter().map(|a| opt_sig9(a[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residuals and α for the two-mode, BO and reduced models on the table's
/// flux points. Resonator rows are skipped since none of these models has one.
pub fn model_discrepancy_report(params: &DeviceParams, table: &TransitionTable, trunc: &Truncation) -> Result<DiscrepancyReport> {
    params.validate()?;
    let qubit_rows: Vec<_> = table.sorted().rows().iter().filter(|r| r.label != TransitionLabel::Fres).copied().collect();
    let table = TransitionTable::new(qubit_rows)?;
    if table.is_empty() {
        return Err(Error::Config("no qubit transitions in the table".into()));
    }
    let fluxes = table.fluxes();
    let mut out = DiscrepancyReport { summaries: vec![], residuals: vec![], fluxes: fluxes.clone(), alpha: vec![] };
    for model in ModelKind::FLUX_MODELS {
        let spectra = spectra_by_flux(params, &table, model, trunc);
        let rows = table
            .rows()
            .iter()
            .map(|row| {
                let (m, failure) = match &spectra[&row.flux_phi0.to_bits()] {
                    Ok(s) => match model_value(s, row.label) {
                        Some(v) => (Some(v), None),
                        None => (None, Some(format!("{} not identified", row.label))),
                    },
                    Err(e) => (None, Some(e.to_string())),
                };
                ResidualRow { row: *row, model_ghz: m, residual_ghz: m.map(|v| v - row.freq_ghz), failure }
            })
            .collect();
        let res = Residuals { model, rows };
        out.summaries.push(ModelSummary {
            model,
            mean_abs_residual_ghz: res.mean_abs(),
            rows_used: res.values().len(),
            rows_excluded: res.excluded(),
        });
        out.alpha.push(fluxes.iter().map(|f| spectra[&f.to_bits()].as_ref().ok().and_then(|s| s.anharmonicity)).collect());
        out.residuals.push(res);
    }
    Ok(out)
}
