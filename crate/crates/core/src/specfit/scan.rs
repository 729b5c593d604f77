//! Two-tone scan cube and its long-form CSV representation.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response indexed [flux][amplitude][frequency].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoToneScan {
    flux: Vec<f64>,
    amp: Vec<f64>,
    freq: Vec<f64>,
    response: Vec<f64>,
}

pub const SCAN_CSV_HEADER: [&str; 4] = ["phi_e_phi0", "amp", "freq_GHz", "response"];

fn strictly_increasing(name: &str, axis: &[f64]) -> Result<()> {
    if let Some(i) = axis.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{name} axis not strictly increasing at index {}", i + 1)));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} axis has non-finite values")));
    }
    Ok(())
}

impl TwoToneScan {
    pub fn new(flux: Vec<f64>, amp: Vec<f64>, freq: Vec<f64>, response: Vec<f64>) -> Result<Self> {
        strictly_increasing("flux", &flux)?;
        strictly_increasing("amplitude", &amp)?;
        strictly_increasing("frequency", &freq)?;
        let n = flux.len() * amp.len() * freq.len();
        if response.len() != n {
            return Err(Error::Config(format!("response has {} values, axes imply {n}", response.len())));
        }
        if let Some(i) = response.iter().position(|r| !r.is_finite()) {
            return Err(Error::Config(format!("non-finite response at flat index {i}")));
        }
        Ok(Self { flux, amp, freq, response })
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    pub fn amp(&self) -> &[f64] {
        &self.amp
    }

    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    /// (n_flux, n_amp, n_freq).
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.flux.len(), self.amp.len(), self.freq.len())
    }

    pub fn at(&self, f: usize, a: usize, q: usize) -> f64 {
        self.response[(f * self.amp.len() + a) * self.freq.len() + q]
    }

    /// Frequency trace at one flux and amplitude.
    pub fn trace(&self, f: usize, a: usize) -> &[f64] {
        let start = (f * self.amp.len() + a) * self.freq.len();
        &self.response[start..start + self.freq.len()]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { response: self.response.iter().map(|r| r * factor).collect(), ..self.clone() }
    }

    /// Rows in flux-major, then amplitude, then frequency order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SCAN_CSV_HEADER)?;
        for (fi, f) in self.flux.iter().enumerate() {
            for (ai, a) in self.amp.iter().enumerate() {
                for (qi, q) in self.freq.iter().enumerate() {
                    // Shortest round-trip formatting keeps write → load exact.
                    w.write_record([f.to_string(), a.to_string(), q.to_string(), self.at(fi, ai, qi).to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Parses the long-form CSV. Rows must run over frequency fastest, then
    /// amplitude, then flux, covering the full grid.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != SCAN_CSV_HEADER {
            return Err(Error::Parse { row: 1, msg: format!("expected header {}, got {}", SCAN_CSV_HEADER.join(","), header.join(",")) });
        }
        let mut rows: Vec<[f64; 4]> = vec![];
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { row: line, msg: e.to_string() })?;
            if rec.len() != 4 {
                return Err(Error::Parse { row: line, msg: format!("expected 4 fields, got {}", rec.len()) });
            }
            let mut v = [0.0; 4];
            for (k, field) in rec.iter().enumerate() {
                v[k] = field.parse::<f64>().map_err(|e| Error::Parse {
                    row: line,
                    msg: format!("column {}: '{field}': {e}", SCAN_CSV_HEADER[k]),
                })?;
                if !v[k].is_finite() {
                    return Err(Error::Parse { row: line, msg: format!("column {}: non-finite value", SCAN_CSV_HEADER[k]) });
                }
            }
            rows.push(v);
        }
        if rows.is_empty() {
            return Err(Error::Config("scan contains no data rows".into()));
        }

        let same_block = |r: &[f64; 4], s: &[f64; 4]| r[0] == s[0] && r[1] == s[1];
        let nq = rows.iter().take_while(|r| same_block(r, &rows[0])).count();
        let freq: Vec<f64> = rows[..nq].iter().map(|r| r[2]).collect();
        let na = rows.iter().step_by(nq).take_while(|r| r[0] == rows[0][0]).count();
        let amp: Vec<f64> = rows.iter().step_by(nq).take(na).map(|r| r[1]).collect();
        let flux: Vec<f64> = rows.iter().step_by(nq * na).map(|r| r[0]).collect();

        let check_axis = |name: &str, axis: &[f64], stride: usize| -> Result<()> {
            if let Some(i) = axis.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::Parse {
                    row: (i + 1) * stride + 2,
                    msg: format!("{name} axis not strictly increasing"),
                });
            }
            Ok(())
        };
        check_axis("frequency", &freq, 1)?;
        check_axis("amplitude", &amp, nq)?;
        check_axis("flux", &flux, nq * na)?;

        for (i, r) in rows.iter().enumerate() {
            let (fi, ai, qi) = (i / (na * nq), (i / nq) % na, i % nq);
            let expect = [flux.get(fi), Some(&amp[ai]), Some(&freq[qi])];
            if expect[0] != Some(&r[0]) || expect[1] != Some(&r[1]) || expect[2] != Some(&r[2]) {
                return Err(Error::Parse {
                    row: i + 2,
                    msg: format!(
                        "grid out of order or incomplete: expected (phi_e={:?}, amp={}, freq={}), found ({}, {}, {})",
                        expect[0], amp[ai], freq[qi], r[0], r[1], r[2]
                    ),
                });
            }
        }
        if rows.len() != flux.len() * na * nq {
            return Err(Error::Parse { row: rows.len() + 1, msg: "incomplete final block".into() });
        }
        let response = rows.iter().map(|r| r[3]).collect();
        Self::new(flux, amp, freq, response)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Loads a scan file.
pub fn load_scan(path: impl AsRef<Path>) -> Result<TwoToneScan> {
    TwoToneScan::load(path)
}

/// Mean over the amplitude rows inside a window, at one flux index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedTrace {
    pub flux_phi0: f64,
    pub freq: Vec<f64>,
    pub values: Vec<f64>,
    /// Inclusive amplitude window that was requested.
    pub amp_window: (f64, f64),
    /// Amplitude rows actually averaged.
    pub amp_rows: usize,
}

/// Averages the response over amplitudes in [lo, hi] at one flux index.
pub fn average_over_amplitude(scan: &TwoToneScan, flux_index: usize, amp_window: (f64, f64)) -> Result<AveragedTrace> {
    let (nf, _, nq) = scan.shape();
    if flux_index >= nf {
        return Err(Error::Config(format!("flux index {flux_index} out of range ({nf} points)")));
    }
    let (lo, hi) = amp_window;
    let rows: Vec<usize> = scan.amp().iter().enumerate().filter(|(_, a)| **a >= lo && **a <= hi).map(|(i, _)| i).collect();
    if rows.is_empty() {
        return Err(Error::Config(format!("amplitude window [{lo}, {hi}] selects no rows")));
    }
    let mut values = vec![0.0; nq];
    for &a in &rows {
        for (v, r) in values.iter_mut().zip(scan.trace(flux_index, a)) {
            *v += r;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(AveragedTrace {
        flux_phi0: scan.flux()[flux_index],
        freq: scan.freq().to_vec(),
        values,
        amp_window,
        amp_rows: rows.len(),
    })
}
