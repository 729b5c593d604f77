//! Relaxation and Ramsey fits. Time and frequency units are the caller's
//! (μs and MHz in practice); results come back in the same units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{least_squares, Bounds, LsqOptions, LsqReport};

/// A·exp(−t/T₁) + B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t1: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Standard errors of (T₁, A, B).
    pub std_errors: [f64; 3],
    pub rms: f64,
}

/// A·exp(−t/T₂*)·cos(2πδt + φ) + B with δ ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub t2_star: f64,
    pub detuning: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Standard errors of (T₂*, δ, φ, A, B).
    pub std_errors: [f64; 5],
    pub rms: f64,
}

pub fn decay_model(t: f64, t1: f64, a: f64, b: f64) -> f64 {
    a * (-t / t1).exp() + b
}

pub fn ramsey_model(t: f64, t2: f64, delta: f64, phase: f64, a: f64, b: f64) -> f64 {
    a * (-t / t2).exp() * (2.0 * PI * delta * t + phase).cos() + b
}

fn check_samples(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::Config("time and value arrays differ in length".into()));
    }
    if times.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 samples, got {}", times.len())));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::Fit("samples contain non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("times must be strictly increasing".into()));
    }
    let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    if hi - lo <= 1e-12 * scale {
        return Err(Error::Fit("constant data: no decay to fit".into()));
    }
    Ok((hi - lo, times[times.len() - 1] - times[0]))
}

fn tail_mean(values: &[f64]) -> f64 {
    let n = (values.len() / 10).max(1);
    values[values.len() - n..].iter().sum::<f64>() / n as f64
}

fn rms(rep: &LsqReport, n: usize, vscale: f64) -> f64 {
    (rep.cost / n as f64).sqrt() * vscale
}

/// Fits A·exp(−t/T₁) + B. Decays longer than 100× the record are reported as
/// a fit error rather than an unbounded T₁.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    let (range, span) = check_samples(times, values)?;
    let t0 = times[0];
    let ts: Vec<f64> = times.iter().map(|t| (t - t0) / span).collect();
    let ys: Vec<f64> = values.iter().map(|v| v / range).collect();
    let b0 = tail_mean(&ys);
    let a0 = ys[0] - b0;
    // Area under the baseline-subtracted curve is A·T for a full decay.
    let area: f64 = ts.windows(2).zip(ys.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1] - 2.0 * b0)).sum();
    let tau0 = if a0 != 0.0 { (area / a0).clamp(0.02, 2.0) } else { 0.3 };
    let model = |p: &[f64]| -> Result<Vec<f64>> { Ok(ts.iter().zip(&ys).map(|(t, y)| decay_model(*t, p[0], p[1], p[2]) - y).collect()) };
    let bounds = Bounds::new(vec![1e-4, f64::NEG_INFINITY, f64::NEG_INFINITY], vec![100.0, f64::INFINITY, f64::INFINITY]);
    let rep = least_squares(model, &[tau0, a0, b0], &bounds, &LsqOptions::default())?;
    if rep.at_bound[0] {
        return Err(Error::Fit(format!("T1 ran into its bound ({} in record units)", rep.x[0])));
    }
    let p = &rep.x;
    let se = &rep.std_errors;
    // Shifting the time origin rescales A by exp(t0/T1).
    let shift = (t0 / (p[0] * span)).exp();
    Ok(DecayFit {
        t1: p[0] * span,
        amplitude: p[1] * range * shift,
        offset: p[2] * range,
        std_errors: [se[0] * span, se[1] * range * shift, se[2] * range],
        rms: rms(&rep, times.len(), range),
    })
}

/// Dominant frequency of uniformly sampled data by a zero-padded periodogram,
/// refined by a parabola through the peak bin.
fn periodogram_peak(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let dt = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    let nyquist = 0.5 / dt;
    let bins = 8 * n;
    let power = |f: f64| -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, y) in ts.iter().zip(ys) {
            let w = 2.0 * PI * f * t;
            re += (y - mean) * w.cos();
            im -= (y - mean) * w.sin();
        }
        (re * re + im * im, im.atan2(re))
    };
    let df = nyquist / bins as f64;
    let spec: Vec<f64> = (0..=bins).map(|i| power(i as f64 * df).0).collect();
    let k = (1..bins).max_by(|a, b| spec[*a].total_cmp(&spec[*b])).unwrap_or(1);
    let (l, c, r) = (spec[k - 1], spec[k], spec[k + 1]);
    let denom = l - 2.0 * c + r;
    let shift = if denom.abs() > 0.0 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let f = (k as f64 + shift) * df;
    (f, power(f).1)
}

/// Fits a damped Ramsey fringe, seeded from a periodogram and refined from a
/// few envelope guesses. A fringe without oscillation is a fit error.
pub fn fit_ramsey(times: &[f64], values: &[f64]) -> Result<RamseyFit> {
    let (range, span) = check_samples(times, values)?;
    let t0 = times[0];
    let ts: Vec<f64> = times.iter().map(|t| (t - t0) / span).collect();
    let ys: Vec<f64> = values.iter().map(|v| v / range).collect();
    let (f0, phi0) = periodogram_peak(&ts, &ys);
    if f0 <= 0.0 {
        return Err(Error::Fit("no oscillation found".into()));
    }
    let b0 = tail_mean(&ys);
    let a0 = ys.iter().fold(0.0_f64, |m, y| m.max((y - b0).abs()));
    let model = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(ts.iter().zip(&ys).map(|(t, y)| ramsey_model(*t, p[0], p[1], p[2], p[3], p[4]) - y).collect())
    };
    let bounds = Bounds::new(
        vec![1e-3, 0.0, f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY],
        vec![100.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY],
    );
    let mut best: Option<LsqReport> = None;
    for tau in [0.1, 0.3, 1.0, 3.0] {
        let rep = least_squares(model, &[tau, f0, phi0, a0.max(1e-3), b0], &bounds, &LsqOptions::default())?;
        if best.as_ref().is_none_or(|b| rep.cost < b.cost) {
            best = Some(rep);
        }
    }
    let rep = best.expect("at least one start");
    let p = &rep.x;
    let se = &rep.std_errors;
    if rep.at_bound[3] || !(3.0 * se[3] < p[3].abs()) {
        return Err(Error::Fit("degenerate fringe: oscillation amplitude not resolved".into()));
    }
    if rep.at_bound[0] {
        return Err(Error::Fit("T2* ran into its bound".into()));
    }
    // Undo the time shift: the phase and amplitude were fitted at t − t0.
    let t2 = p[0] * span;
    let delta = p[1] / span;
    let shift = (t0 / t2).exp();
    let phase = (p[2] - 2.0 * PI * delta * t0).rem_euclid(2.0 * PI);
    Ok(RamseyFit {
        t2_star: t2,
        detuning: delta,
        phase,
        amplitude: p[3] * range * shift,
        offset: p[4] * range,
        std_errors: [se[0] * span, se[1] / span, se[2], se[3] * range * shift, se[4] * range],
        rms: rms(&rep, times.len(), range),
    })
}
