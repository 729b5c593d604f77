//! Forward-generated two-tone scans with known line positions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::peaks::lorentzian;
use super::scan::TwoToneScan;
use super::TransitionTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Half width at half maximum of every line (GHz).
    pub gamma_ghz: f64,
    /// Line height at full drive amplitude.
    pub amplitude: f64,
    pub offset: f64,
    /// Gaussian noise standard deviation as a fraction of `amplitude`.
    pub noise_frac: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { gamma_ghz: 0.003, amplitude: 1.0, offset: 0.1, noise_frac: 0.1, seed: 0 }
    }
}

/// Builds a scan whose lines sit at the table's frequencies. A k-photon line
/// grows as (amp/amp_max)^(k−1), so higher lines need stronger drive.
pub fn synthetic_scan(truth: &TransitionTable, flux: &[f64], amp: &[f64], freq: &[f64], opts: &SynthOptions) -> Result<TwoToneScan> {
    if !(opts.gamma_ghz > 0.0 && opts.noise_frac >= 0.0 && opts.amplitude.is_finite()) {
        return Err(Error::Config("synthetic scan needs γ > 0 and non-negative noise".into()));
    }
    let amax = amp.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if amax <= 0.0 {
        return Err(Error::Config("amplitude axis must contain a non-zero value".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.noise_frac * opts.amplitude.abs()).map_err(|e| Error::Config(e.to_string()))?;
    let mut response = Vec::with_capacity(flux.len() * amp.len() * freq.len());
    for &phi in flux {
        let lines: Vec<_> = truth.rows().iter().filter(|r| r.flux_phi0 == phi).collect();
        for &a in amp {
            for &f in freq {
                let mut v = opts.offset;
                for line in &lines {
                    let k = line.label.divisor() as i32;
                    let height = opts.amplitude * (a / amax).powi(k - 1);
                    v += lorentzian(f, line.freq_ghz, opts.gamma_ghz, height, 0.0);
                }
                response.push(v + noise.sample(&mut rng));
            }
        }
    }
    TwoToneScan::new(flux.to_vec(), amp.to_vec(), freq.to_vec(), response)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfit::{TransitionLabel, TransitionRow};

    #[test]
    fn deterministic_and_shaped() {
        let truth = TransitionTable::new(vec![TransitionRow { flux_phi0: 0.1, label: TransitionLabel::F01, freq_ghz: 5.0, err_ghz: 0.0 }]).unwrap();
        let freq: Vec<f64> = (0..50).map(|i| 4.975 + 0.001 * i as f64).collect();
        let opts = SynthOptions { seed: 7, ..Default::default() };
        let a = synthetic_scan(&truth, &[0.0, 0.1, 0.2], &[0.5, 1.0], &freq, &opts).unwrap();
        let b = synthetic_scan(&truth, &[0.0, 0.1, 0.2], &[0.5, 1.0], &freq, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), (3, 2, 50));
        let clean = synthetic_scan(&truth, &[0.1], &[1.0], &freq, &SynthOptions { noise_frac: 0.0, ..opts }).unwrap();
        assert!((clean.at(0, 0, 25) - 1.1).abs() < 1e-12);
    }
}
