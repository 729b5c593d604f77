//! Lorentzian line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{least_squares, Bounds, LsqOptions};

/// A/(1 + ((f − f₀)/γ)²) + B with γ the half width at half maximum.
pub fn lorentzian(f: f64, f0: f64, gamma: f64, a: f64, b: f64) -> f64 {
    let x = (f - f0) / gamma;
    a / (1.0 + x * x) + b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakInit {
    pub f0: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub f0: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Standard errors of (f0, gamma, amplitude, offset).
    pub std_errors: [f64; 4],
    pub rms: f64,
    pub iterations: usize,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Seeds from the baseline median and the most extreme point.
pub fn seed_lorentzian(freq: &[f64], values: &[f64]) -> Result<PeakInit> {
    let b = median(values);
    let (imax, vmax) = values.iter().copied().enumerate().fold((0, f64::MIN), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let (imin, vmin) = values.iter().copied().enumerate().fold((0, f64::MAX), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let scale = vmax.abs().max(vmin.abs()).max(f64::MIN_POSITIVE);
    if vmax - vmin <= 1e-12 * scale {
        return Err(Error::Fit("flat trace: no peak to fit".into()));
    }
    let (i0, a) = if vmax - b >= b - vmin { (imax, vmax - b) } else { (imin, vmin - b) };
    let half = b + 0.5 * a;
    let beyond = values.iter().filter(|&&v| if a > 0.0 { v >= half } else { v <= half }).count().max(1);
    let df = (freq[freq.len() - 1] - freq[0]) / (freq.len() - 1) as f64;
    Ok(PeakInit { f0: freq[i0], gamma: (0.5 * beyond as f64 * df).max(df), amplitude: a, offset: b })
}

/// Least-squares Lorentzian fit, seeded automatically when `init` is None.
pub fn fit_lorentzian(freq: &[f64], values: &[f64], init: Option<PeakInit>) -> Result<PeakFit> {
    if freq.len() != values.len() {
        return Err(Error::Config("frequency and value arrays differ in length".into()));
    }
    if freq.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 points, got {}", freq.len())));
    }
    if values.iter().chain(freq).any(|v| !v.is_finite()) {
        return Err(Error::Fit("trace contains non-finite values".into()));
    }
    let seed = match init {
        Some(s) => s,
        None => seed_lorentzian(freq, values)?,
    };
    let (fmin, fmax) = (freq[0].min(freq[freq.len() - 1]), freq[0].max(freq[freq.len() - 1]));
    let span = fmax - fmin;
    let center = 0.5 * (fmin + fmax);
    let vscale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(seed.amplitude.abs()).max(f64::MIN_POSITIVE);
    let df = span / (freq.len() - 1) as f64;

    // Fit in units of the window span and the response scale.
    let x0 = [(seed.f0 - center) / span, seed.gamma / span, seed.amplitude / vscale, seed.offset / vscale];
    let xs: Vec<f64> = freq.iter().map(|f| (f - center) / span).collect();
    let ys: Vec<f64> = values.iter().map(|v| v / vscale).collect();
    let model = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(xs.iter().zip(&ys).map(|(&x, &y)| lorentzian(x, p[0], p[1], p[2], p[3]) - y).collect())
    };
    let bounds = Bounds::new(vec![-0.5, 0.01 * df / span, f64::NEG_INFINITY, f64::NEG_INFINITY], vec![0.5, 2.0, f64::INFINITY, f64::INFINITY]);
    let rep = least_squares(model, &x0, &bounds, &LsqOptions::default())?;
    let p = &rep.x;
    if rep.at_bound[1] {
        return Err(Error::Fit("linewidth ran into its bound; no resolvable peak".into()));
    }
    let se = &rep.std_errors;
    Ok(PeakFit {
        f0: center + p[0] * span,
        gamma: p[1] * span,
        amplitude: p[2] * vscale,
        offset: p[3] * vscale,
        std_errors: [se[0] * span, se[1] * span, se[2] * vscale, se[3] * vscale],
        rms: (rep.cost / freq.len() as f64).sqrt() * vscale,
        iterations: rep.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(f0: f64, half: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| f0 - half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn noiseless_recovery() {
        let f = grid(4.2007, 0.02, 81);
        let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, 4.2, 0.003, 1.3, 0.2)).collect();
        let fit = fit_lorentzian(&f, &y, None).unwrap();
        assert!((fit.f0 - 4.2).abs() < 1e-6);
        assert!((fit.gamma - 0.003).abs() < 1e-6);
        assert!(fit.gamma > 0.0 && fit.std_errors.iter().all(|e| *e >= 0.0));
    }

    #[test]
    fn dips_are_fitted_with_negative_amplitude() {
        let f = grid(5.0, 0.02, 81);
        let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, 4.995, 0.002, -0.8, 1.0)).collect();
        let fit = fit_lorentzian(&f, &y, None).unwrap();
        assert!((fit.f0 - 4.995).abs() < 1e-6);
        assert!(fit.amplitude < 0.0);
    }

    #[test]
    fn flat_trace_is_an_error() {
        let f = grid(5.0, 0.02, 21);
        assert!(matches!(fit_lorentzian(&f, &[1.0; 21], None), Err(Error::Fit(_))));
        assert!(fit_lorentzian(&f[..4], &[1.0, 2.0, 1.0, 1.0], None).is_err());
    }

    #[test]
    fn noisy_center_within_a_tenth_of_the_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let f = grid(4.2, 0.03, 121);
        let mut good = 0;
        for _ in 0..100 {
            let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, 4.2, 0.003, 1.0, 0.0) + noise.sample(&mut rng)).collect();
            if let Ok(fit) = fit_lorentzian(&f, &y, None) {
                if (fit.f0 - 4.2).abs() < 0.0003 {
                    good += 1;
                }
            }
        }
        assert!(good >= 95, "{good}/100");
    }

    #[test]
    fn affine_reparameterization() {
        let f = grid(4.2, 0.02, 81);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, 4.203, 0.003, 1.0, 0.1) + noise.sample(&mut rng)).collect();
        let a = fit_lorentzian(&f, &y, None).unwrap();
        let (s, t) = (1000.0, -4200.0);
        let g: Vec<f64> = f.iter().map(|x| s * x + t).collect();
        let b = fit_lorentzian(&g, &y, None).unwrap();
        assert!(((b.f0 - t) / s - a.f0).abs() < 1e-8);
        assert!((b.gamma / s - a.gamma).abs() < 1e-8);
    }
}
