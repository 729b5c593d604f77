//! Per-flux, per-line extraction: amplitude average, then Lorentzian fit.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::peaks::fit_lorentzian;
use super::scan::{average_over_amplitude, TwoToneScan};
use super::{TransitionLabel, TransitionRow, TransitionTable};
use crate::error::{Error, Result};
use crate::fmt::sig9;

/// One extraction window. Several windows may share a label when they cover
/// different flux ranges, which is how a tuning line is followed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionWindow {
    pub label: TransitionLabel,
    /// Must equal the label's photon number when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<usize>,
    #[serde(rename = "freq_window_GHz")]
    pub freq_window: [f64; 2],
    /// Inclusive amplitude range to average; full range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp_window: Option<[f64; 2]>,
    /// Inclusive flux range where the window applies; everywhere when absent.
    #[serde(default, rename = "phi_e_phi0", skip_serializing_if = "Option::is_none")]
    pub flux_window: Option<[f64; 2]>,
}

impl TransitionWindow {
    pub fn applies_at(&self, flux_phi0: f64) -> bool {
        self.flux_window.is_none_or(|[lo, hi]| flux_phi0 >= lo && flux_phi0 <= hi)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionConfig {
    pub transitions: Vec<TransitionWindow>,
}

fn ordered(name: &str, w: [f64; 2]) -> Result<()> {
    if !(w[0].is_finite() && w[1].is_finite() && w[0] <= w[1]) {
        return Err(Error::Config(format!("{name} [{}, {}] must be finite with lo ≤ hi", w[0], w[1])));
    }
    Ok(())
}

impl ExtractionConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Field-level checks that do not need a flux grid.
    pub fn validate(&self) -> Result<()> {
        for w in &self.transitions {
            ordered("freq_window_GHz", w.freq_window)?;
            if w.freq_window[0] >= w.freq_window[1] {
                return Err(Error::Config(format!("{}: empty frequency window", w.label)));
            }
            if let Some(a) = w.amp_window {
                ordered("amp_window", a)?;
            }
            if let Some(f) = w.flux_window {
                ordered("phi_e_phi0", f)?;
            }
            if let Some(k) = w.divisor {
                if k != w.label.divisor() {
                    return Err(Error::Config(format!("{}: divisor {k} does not match the label (expected {})", w.label, w.label.divisor())));
                }
            }
        }
        Ok(())
    }

    /// Windows active at one flux; at most one per label and pairwise disjoint in frequency.
    pub fn active_at(&self, flux_phi0: f64) -> Result<Vec<&TransitionWindow>> {
        let act: Vec<&TransitionWindow> = self.transitions.iter().filter(|w| w.applies_at(flux_phi0)).collect();
        for (i, a) in act.iter().enumerate() {
            for b in &act[i + 1..] {
                if a.label == b.label {
                    return Err(Error::Config(format!("two {} windows apply at Φe = {flux_phi0}", a.label)));
                }
                if a.freq_window[0] < b.freq_window[1] && b.freq_window[0] < a.freq_window[1] {
                    return Err(Error::Config(format!("{} and {} windows overlap at Φe = {flux_phi0}", a.label, b.label)));
                }
            }
        }
        Ok(act)
    }
}

/// A (flux, label) cell whose fit did not produce a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionFailure {
    pub flux_phi0: f64,
    pub label: TransitionLabel,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub table: TransitionTable,
    pub failures: Vec<ExtractionFailure>,
}

pub const FAILURE_CSV_HEADER: [&str; 3] = ["phi_e_phi0", "label", "reason"];

impl ExtractionResult {
    pub fn write_failures_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(FAILURE_CSV_HEADER)?;
        for f in &self.failures {
            w.write_record([sig9(f.flux_phi0), f.label.to_string(), f.reason.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn extract_cell(scan: &TwoToneScan, fi: usize, w: &TransitionWindow) -> Result<TransitionRow> {
    let amp = scan.amp();
    let window = w.amp_window.map_or((amp[0], amp[amp.len() - 1]), |[lo, hi]| (lo, hi));
    let avg = average_over_amplitude(scan, fi, window)?;
    let [lo, hi] = w.freq_window;
    let (f, v): (Vec<f64>, Vec<f64>) =
        avg.freq.iter().zip(&avg.values).filter(|(f, _)| **f >= lo && **f <= hi).map(|(f, v)| (*f, *v)).unzip();
    let fit = fit_lorentzian(&f, &v, None)?;
    if fit.f0 < lo || fit.f0 > hi {
        return Err(Error::Fit(format!("center {} GHz outside window", fit.f0)));
    }
    if !(fit.std_errors[0].is_finite() && fit.f0 > 0.0) {
        return Err(Error::Fit("center uncertainty undefined".into()));
    }
    Ok(TransitionRow { flux_phi0: avg.flux_phi0, label: w.label, freq_ghz: fit.f0, err_ghz: fit.std_errors[0] })
}

/// Fits every configured (flux, label) cell. Cell failures are recorded and
/// leave the other cells untouched; configuration problems abort.
pub fn extract_transitions(scan: &TwoToneScan, config: &ExtractionConfig) -> Result<ExtractionResult> {
    config.validate()?;
    if scan.is_empty() {
        return Ok(ExtractionResult::default());
    }
    let mut jobs = vec![];
    for (fi, &flux) in scan.flux().iter().enumerate() {
        for w in config.active_at(flux)? {
            if let Some([lo, hi]) = w.amp_window {
                if !scan.amp().iter().any(|a| *a >= lo && *a <= hi) {
                    return Err(Error::Config(format!("{}: amplitude window [{lo}, {hi}] selects no rows", w.label)));
                }
            }
            jobs.push((fi, w));
        }
    }
    let fits = crate::par_map(&jobs, |(fi, w)| extract_cell(scan, *fi, w));
    let mut out = ExtractionResult::default();
    for ((fi, w), res) in jobs.iter().zip(fits) {
        match res {
            Ok(row) => out.table.push(row)?,
            Err(e) => out.failures.push(ExtractionFailure { flux_phi0: scan.flux()[*fi], label: w.label, reason: e.to_string() }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfit::peaks::lorentzian;

    fn window(label: TransitionLabel, lo: f64, hi: f64) -> TransitionWindow {
        TransitionWindow { label, divisor: None, freq_window: [lo, hi], amp_window: None, flux_window: None }
    }

    #[test]
    fn config_json_and_validation() {
        let text = r#"{"transitions": [
            {"label": "f01", "divisor": 1, "freq_window_GHz": [5.0, 5.2]},
            {"label": "f02/2", "divisor": 2, "freq_window_GHz": [4.9, 5.0], "amp_window": [0.5, 1.0], "phi_e_phi0": [0.0, 0.4]}
        ]}"#;
        let c = ExtractionConfig::from_json_str(text).unwrap();
        assert_eq!(c.transitions.len(), 2);
        assert_eq!(ExtractionConfig::from_json_str(&c.to_json_string().unwrap()).unwrap(), c);
        assert_eq!(c.active_at(0.45).unwrap().len(), 1);
        let bad_k = r#"{"transitions": [{"label": "f03/3", "divisor": 2, "freq_window_GHz": [1, 2]}]}"#;
        assert!(ExtractionConfig::from_json_str(bad_k).is_err());
        let overlap = ExtractionConfig { transitions: vec![window(TransitionLabel::F01, 5.0, 5.2), window(TransitionLabel::F02, 5.1, 5.3)] };
        assert!(matches!(overlap.active_at(0.0), Err(Error::Config(_))));
    }

    #[test]
    fn empty_scan_gives_empty_table() {
        let c = ExtractionConfig { transitions: vec![window(TransitionLabel::F01, 5.0, 5.2)] };
        let r = extract_transitions(&TwoToneScan::default(), &c).unwrap();
        assert!(r.table.is_empty() && r.failures.is_empty());
    }

    #[test]
    fn failures_are_per_cell() {
        let freq: Vec<f64> = (0..201).map(|i| 4.9 + 0.001 * i as f64).collect();
        let mut resp = vec![];
        for q in &freq {
            resp.push(lorentzian(*q, 5.05, 0.003, 1.0, 0.0));
        }
        for _ in &freq {
            resp.push(0.25);
        }
        let scan = TwoToneScan::new(vec![0.0, 0.1], vec![1.0], freq, resp).unwrap();
        let c = ExtractionConfig { transitions: vec![window(TransitionLabel::F01, 5.0, 5.1)] };
        let r = extract_transitions(&scan, &c).unwrap();
        assert_eq!(r.table.len(), 1);
        assert!((r.table.rows()[0].freq_ghz - 5.05).abs() < 1e-7);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].flux_phi0, 0.1);
        assert!(r.table.rows().iter().all(|row| row.freq_ghz.is_finite() && row.err_ghz.is_finite()));
    }
}
