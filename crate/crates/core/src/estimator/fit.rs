//! Least-squares fits of device parameters to transition tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{model_value, residuals, spectra_by_flux, Residuals};
use crate::circuit::DeviceParams;
use crate::error::{Error, Result};
use crate::lsq::{least_squares, Bounds, LsqOptions};
use crate::models::{ModelKind, Truncation};
use crate::specfit::{TransitionLabel, TransitionTable};

/// Parameter keys, matching the device-parameter JSON.
pub const PARAM_NAMES: [&str; 10] =
    ["C_fF", "EJ1_GHz", "CJ1_fF", "EJA_GHz", "CJA_fF", "EJB_GHz", "CJB_fF", "fres_bare_GHz", "Cg_fF", "Cr_pF"];

fn slot<'a>(p: &'a mut DeviceParams, name: &str) -> Result<&'a mut f64> {
    Ok(match name {
        "C_fF" => &mut p.c,
        "EJ1_GHz" => &mut p.ej1,
        "CJ1_fF" => &mut p.cj1,
        "EJA_GHz" => &mut p.eja,
        "CJA_fF" => &mut p.cja,
        "EJB_GHz" => &mut p.ejb,
        "CJB_fF" => &mut p.cjb,
        "fres_bare_GHz" => &mut p.f_res_bare,
        "Cg_fF" => &mut p.cg,
        "Cr_pF" => &mut p.cr_pf,
        other => return Err(Error::Config(format!("unknown parameter '{other}' (expected one of {})", PARAM_NAMES.join(", ")))),
    })
}

pub fn get_param(p: &DeviceParams, name: &str) -> Result<f64> {
    let mut q = *p;
    Ok(*slot(&mut q, name)?)
}

pub fn set_param(p: &mut DeviceParams, name: &str, value: f64) -> Result<()> {
    *slot(p, name)? = value;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParam {
    pub name: String,
    pub init: f64,
    pub bounds: [f64; 2],
}

/// What to fit and against which lines. Parameters that are neither free
/// nor listed in `fixed` come from the base parameter set given to `resolve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub model: ModelKind,
    /// Lines used in the objective; other table rows are ignored.
    pub transitions: Vec<TransitionLabel>,
    #[serde(default)]
    pub free: Vec<FreeParam>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl FitSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(Error::Config("fit spec lists no transitions".into()));
        }
        if self.model == ModelKind::HarmonicTransmon {
            return Err(Error::Config("device fits need a flux model".into()));
        }
        if self.model != ModelKind::TwoModeWithResonator && self.transitions.contains(&TransitionLabel::Fres) {
            return Err(Error::Config(format!("fres requires the two-mode-resonator model, not {}", self.model)));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut dummy = DeviceParams::cd1();
        for fp in &self.free {
            slot(&mut dummy, &fp.name)?;
            if !seen.insert(fp.name.as_str()) {
                return Err(Error::Config(format!("parameter {} listed twice as free", fp.name)));
            }
            if self.fixed.contains_key(&fp.name) {
                return Err(Error::Config(format!("parameter {} is both free and fixed", fp.name)));
            }
            let [lo, hi] = fp.bounds;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("{}: bounds must be finite with lo < hi", fp.name)));
            }
            if !(fp.init >= lo && fp.init <= hi) {
                return Err(Error::Config(format!("{}: initial value {} outside bounds", fp.name, fp.init)));
            }
        }
        for (name, v) in &self.fixed {
            slot(&mut dummy, name)?;
            if !v.is_finite() {
                return Err(Error::Config(format!("fixed {name} is not finite")));
            }
        }
        Ok(())
    }

    /// Starting parameter set: base, then fixed values, then initial values.
    pub fn resolve(&self, base: &DeviceParams) -> Result<DeviceParams> {
        self.validate()?;
        let mut p = *base;
        for (name, v) in &self.fixed {
            set_param(&mut p, name, *v)?;
        }
        for fp in &self.free {
            set_param(&mut p, &fp.name, fp.init)?;
        }
        Ok(p)
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation.unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub init: f64,
    pub value: f64,
    /// None when the Jacobian was rank deficient.
    pub std_error: Option<f64>,
    pub at_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub params: DeviceParams,
    pub free: Vec<FittedParam>,
    pub residuals: Residuals,
    pub mean_abs_residual_ghz: f64,
    /// Rows whose model prediction failed at the starting point.
    pub excluded_rows: usize,
    pub weighted: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub cost: f64,
    pub rank_deficient: bool,
    /// True when errors are trustworthy: full rank and no active bound.
    pub errors_reliable: bool,
}

impl FitReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_residuals_csv<W: Write>(&self, out: W) -> Result<()> {
        self.residuals.write_csv(out)
    }
}

/// Fits the free parameters of `spec` to the table rows whose labels it lists.
/// Rows are put in canonical order first, so the result does not depend on
/// the input order.
pub fn fit_device_parameters(spec: &FitSpec, base: &DeviceParams, table: &TransitionTable) -> Result<FitReport> {
    let start = spec.resolve(base)?;
    start.validate()?;
    let trunc = spec.truncation();
    let rows: Vec<_> = table.sorted().rows().iter().filter(|r| spec.transitions.contains(&r.label)).copied().collect();
    let used = TransitionTable::new(rows)?;
    if used.is_empty() {
        return Err(Error::Config("no table rows match the fit spec's transitions".into()));
    }
    let initial = residuals(&start, &used, spec.model, &trunc)?;
    let keep: Vec<_> = initial.rows.iter().filter(|r| r.residual_ghz.is_some()).map(|r| r.row).collect();
    let excluded_rows = used.len() - keep.len();
    let fit_table = TransitionTable::new(keep)?;
    let n_free = spec.free.len();
    if fit_table.len() < n_free + 2 {
        return Err(Error::Config(format!(
            "{} usable rows for {n_free} free parameters; need at least {}",
            fit_table.len(),
            n_free + 2
        )));
    }
    let weighted = fit_table.rows().iter().all(|r| r.err_ghz > 0.0);
    let weights: Vec<f64> = fit_table.rows().iter().map(|r| if weighted { 1.0 / r.err_ghz } else { 1.0 }).collect();

    let build = |x: &[f64]| -> Result<DeviceParams> {
        let mut p = start;
        for (fp, v) in spec.free.iter().zip(x) {
            set_param(&mut p, &fp.name, *v)?;
        }
        p.validate()?;
        Ok(p)
    };
    let objective = |x: &[f64]| -> Result<Vec<f64>> {
        let p = build(x)?;
        let spectra = spectra_by_flux(&p, &fit_table, spec.model, &trunc);
        fit_table
            .rows()
            .iter()
            .zip(&weights)
            .map(|(row, w)| {
                let s = spectra[&row.flux_phi0.to_bits()].as_ref().map_err(|e| Error::Numeric(e.to_string()))?;
                let m = model_value(s, row.label)
                    .ok_or_else(|| Error::Numeric(format!("{} lost at Φe = {}", row.label, row.flux_phi0)))?;
                Ok((m - row.freq_ghz) * w)
            })
            .collect()
    };

    let x0: Vec<f64> = spec.free.iter().map(|f| f.init).collect();
    let bounds = Bounds::new(spec.free.iter().map(|f| f.bounds[0]).collect(), spec.free.iter().map(|f| f.bounds[1]).collect());
    let rep = least_squares(objective, &x0, &bounds, &LsqOptions::default())?;
    let params = build(&rep.x)?;
    let final_res = residuals(&params, &used, spec.model, &trunc)?;
    let vals = final_res.values();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite residual at the optimum".into()));
    }
    let mean_abs = vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len().max(1) as f64;
    let free = spec
        .free
        .iter()
        .enumerate()
        .map(|(i, fp)| FittedParam {
            name: fp.name.clone(),
            init: fp.init,
            value: rep.x[i],
            std_error: (!rep.rank_deficient).then(|| rep.std_errors[i]),
            at_bound: rep.at_bound[i],
        })
        .collect();
    Ok(FitReport {
        model: spec.model,
        params,
        free,
        mean_abs_residual_ghz: mean_abs,
        residuals: final_res,
        excluded_rows,
        weighted,
        iterations: rep.iterations,
        evaluations: rep.evaluations,
        cost: rep.cost,
        rank_deficient: rep.rank_deficient,
        errors_reliable: !rep.rank_deficient && !rep.at_bound.iter().any(|b| *b),
    })
}
