//! Spectroscopy and coherence data reduction: scan ingestion, amplitude
//! averaging, Lorentzian peak extraction and time-domain decay fits.

pub mod coherence;
pub mod extract;
pub mod peaks;
pub mod scan;
pub mod synth;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;

pub use coherence::{fit_exponential_decay, fit_ramsey, DecayFit, RamseyFit};
pub use extract::{extract_transitions, ExtractionConfig, ExtractionFailure, ExtractionResult, TransitionWindow};
pub use peaks::{fit_lorentzian, lorentzian, seed_lorentzian, PeakFit, PeakInit};
pub use scan::{average_over_amplitude, load_scan, AveragedTrace, TwoToneScan, SCAN_CSV_HEADER};
pub use synth::{synthetic_scan, SynthOptions};

/// Observable line in two-tone spectroscopy. A k-photon transition shows up
/// at f₀ₖ/k, which is the quantity tabulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransitionLabel {
    #[serde(rename = "f01")]
    F01,
    #[serde(rename = "f02/2")]
    F02,
    #[serde(rename = "f03/3")]
    F03,
    #[serde(rename = "f04/4")]
    F04,
    /// Dressed readout resonator frequency.
    #[serde(rename = "fres")]
    Fres,
}

impl TransitionLabel {
    pub const QUBIT: [TransitionLabel; 4] = [Self::F01, Self::F02, Self::F03, Self::F04];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::F01 => "f01",
            Self::F02 => "f02/2",
            Self::F03 => "f03/3",
            Self::F04 => "f04/4",
            Self::Fres => "fres",
        }
    }

    /// Photon number k of a qubit transition, 1 for the resonator.
    pub fn divisor(self) -> usize {
        match self {
            Self::F01 | Self::Fres => 1,
            Self::F02 => 2,
            Self::F03 => 3,
            Self::F04 => 4,
        }
    }

    /// Upper level index k for qubit transitions.
    pub fn qubit_level(self) -> Option<usize> {
        match self {
            Self::Fres => None,
            other => Some(other.divisor()),
        }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitionLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "f01" => Ok(Self::F01),
            "f02/2" => Ok(Self::F02),
            "f03/3" => Ok(Self::F03),
            "f04/4" => Ok(Self::F04),
            "fres" | "f_res" => Ok(Self::Fres),
            other => Err(Error::Config(format!("unknown transition label '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub flux_phi0: f64,
    pub label: TransitionLabel,
    /// Observed line position, f₀ₖ/k for qubit lines.
    pub freq_ghz: f64,
    /// One-sigma uncertainty; zero when unknown.
    pub err_ghz: f64,
}

/// Measured or synthetic line positions, one row per (flux, label).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    rows: Vec<TransitionRow>,
}

pub const TRANSITION_CSV_HEADER: [&str; 4] = ["phi_e_phi0", "label", "freq_GHz", "err_GHz"];

impl TransitionTable {
    pub fn new(rows: Vec<TransitionRow>) -> Result<Self> {
        let mut t = Self::default();
        for r in rows {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, row: TransitionRow) -> Result<()> {
        if !row.flux_phi0.is_finite() {
            return Err(Error::Config("transition row has non-finite flux".into()));
        }
        if !(row.freq_ghz.is_finite() && row.freq_ghz > 0.0) {
            return Err(Error::Config(format!("{} at {}: frequency must be positive and finite", row.label, row.flux_phi0)));
        }
        if !(row.err_ghz.is_finite() && row.err_ghz >= 0.0) {
            return Err(Error::Config(format!("{} at {}: error must be finite and non-negative", row.label, row.flux_phi0)));
        }
        if self.rows.iter().any(|r| r.flux_phi0 == row.flux_phi0 && r.label == row.label) {
            return Err(Error::Config(format!("duplicate row for {} at {}", row.label, row.flux_phi0)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows sorted by flux, then label.
    pub fn sorted(&self) -> Self {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.flux_phi0.total_cmp(&b.flux_phi0).then(a.label.cmp(&b.label)));
        Self { rows }
    }

    pub fn labels(&self) -> Vec<TransitionLabel> {
        let mut l: Vec<_> = self.rows.iter().map(|r| r.label).collect();
        l.sort();
        l.dedup();
        l
    }

    pub fn fluxes(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.rows.iter().map(|r| r.flux_phi0).collect();
        f.sort_by(f64::total_cmp);
        f.dedup();
        f
    }

    pub fn get(&self, flux_phi0: f64, label: TransitionLabel) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.flux_phi0 == flux_phi0 && r.label == label)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRANSITION_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([sig9(r.flux_phi0), r.label.to_string(), sig9(r.freq_ghz), sig9(r.err_ghz)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Parses the table CSV; an empty err_GHz cell reads as zero.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != TRANSITION_CSV_HEADER {
            return Err(Error::Parse { row: 1, msg: format!("expected header {}", TRANSITION_CSV_HEADER.join(",")) });
        }
        let mut table = Self::default();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { row: line, msg: e.to_string() })?;
            let num = |k: usize| -> Result<f64> {
                let s = rec.get(k).unwrap_or("");
                if k == 3 && s.is_empty() {
                    return Ok(0.0);
                }
                s.parse().map_err(|e| Error::Parse { row: line, msg: format!("column {}: '{s}': {e}", TRANSITION_CSV_HEADER[k]) })
            };
            let label = rec
                .get(1)
                .unwrap_or("")
                .parse()
                .map_err(|e: Error| Error::Parse { row: line, msg: e.to_string() })?;
            let row = TransitionRow { flux_phi0: num(0)?, label, freq_ghz: num(2)?, err_ghz: num(3)? };
            table.push(row).map_err(|e| Error::Parse { row: line, msg: e.to_string() })?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        for l in TransitionLabel::QUBIT.into_iter().chain([TransitionLabel::Fres]) {
            assert_eq!(l.as_str().parse::<TransitionLabel>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{}\"", l.as_str()));
        }
        assert_eq!(TransitionLabel::F03.divisor(), 3);
        assert!("f05/5".parse::<TransitionLabel>().is_err());
    }

    #[test]
    fn table_csv_round_trip_and_invariants() {
        let rows = vec![
            TransitionRow { flux_phi0: 0.0, label: TransitionLabel::F01, freq_ghz: 5.1, err_ghz: 1e-4 },
            TransitionRow { flux_phi0: 0.0, label: TransitionLabel::F02, freq_ghz: 5.05, err_ghz: 2e-4 },
        ];
        let t = TransitionTable::new(rows.clone()).unwrap();
        let mut buf = vec![];
        t.write_csv(&mut buf).unwrap();
        assert_eq!(TransitionTable::read_csv(buf.as_slice()).unwrap(), t);
        let mut dup = rows.clone();
        dup.push(rows[0]);
        assert!(TransitionTable::new(dup).is_err());
        let neg = TransitionRow { freq_ghz: -1.0, ..rows[0] };
        assert!(TransitionTable::new(vec![neg]).is_err());
        let bad = "phi_e_phi0,label,freq_GHz,err_GHz\n0,f01,5,\n0,f09,5,0\n";
        assert!(matches!(TransitionTable::read_csv(bad.as_bytes()), Err(Error::Parse { row: 3, .. })));
    }
}
