//! Harmonic content: fits of 4E_C n² − Σ U_k cos kφ to measured lines, and
//! Fourier analysis of effective potentials.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::hilbert::ChargeBasis;
use crate::lsq::{least_squares, Bounds, LsqOptions};
use crate::models::{harmonic_spectrum, HarmonicSpec};

/// Coefficients of cos(kφ), k = 1..K, normalized so c₁ = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicContent {
    pub c: Vec<f64>,
    /// Unnormalized coefficients in the potential's units.
    pub raw: Option<Vec<f64>>,
}

impl HarmonicContent {
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        let scale = raw.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let c1 = *raw.first().ok_or_else(|| Error::Config("at least one harmonic is required".into()))?;
        if !(c1.abs() > 1e-12 * scale) || !c1.is_finite() {
            return Err(Error::Numeric("fundamental harmonic vanishes; cannot normalize".into()));
        }
        Ok(Self { c: raw.iter().map(|c| c / c1).collect(), raw: Some(raw) })
    }

    pub fn ratio(&self, k: usize) -> Option<f64> {
        self.c.get(k.checked_sub(1)?).copied()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "c_k"])?;
        for (k, c) in self.c.iter().enumerate() {
            w.write_record([(k + 1).to_string(), sig9(*c)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Node count where potential quadrature starts and the cap for doubling.
pub const FOURIER_START_NODES: usize = 2048;
pub const FOURIER_MAX_NODES: usize = 1 << 22;
pub const FOURIER_TOL: f64 = 1e-8;

fn trapezoid(v: &dyn Fn(f64) -> f64, kmax: usize, n: usize) -> Vec<f64> {
    let samples: Vec<f64> = (0..n).map(|i| v(2.0 * PI * i as f64 / n as f64)).collect();
    (1..=kmax)
        .map(|k| {
            let s: f64 = samples.iter().enumerate().map(|(i, y)| y * (2.0 * PI * (k * i % n) as f64 / n as f64).cos()).sum();
            2.0 * s / n as f64
        })
        .collect()
}

/// Unnormalized c_k = (1/π)∫₀^{2π} V cos kφ dφ for k = 1..K by the periodic
/// trapezoid rule, doubling nodes until no coefficient moves by more than
/// 10⁻⁸ relative to the largest one.
pub fn potential_fourier_raw(v: &dyn Fn(f64) -> f64, kmax: usize) -> Result<Vec<f64>> {
    if kmax == 0 {
        return Err(Error::Config("need at least one harmonic".into()));
    }
    let mut n = FOURIER_START_NODES.max(8 * kmax);
    let mut prev = trapezoid(v, kmax, n);
    if prev.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("potential is not finite on [0, 2π)".into()));
    }
    loop {
        n *= 2;
        if n > FOURIER_MAX_NODES {
            return Err(Error::Numeric(format!("Fourier coefficients not converged at {} nodes", n / 2)));
        }
        let next = trapezoid(v, kmax, n);
        let scale = next.iter().fold(0.0_f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
        let change = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = next;
        if change <= FOURIER_TOL * scale.max(1.0) {
            return Ok(prev);
        }
    }
}

/// Fourier content of `v` normalized to the fundamental.
pub fn potential_fourier(v: &dyn Fn(f64) -> f64, kmax: usize) -> Result<HarmonicContent> {
    let raw = potential_fourier_raw(v, kmax)?;
    let vmax = (0..FOURIER_START_NODES).map(|i| v(2.0 * PI * i as f64 / FOURIER_START_NODES as f64).abs()).fold(0.0, f64::max);
    if raw[0].abs() <= 1e-12 * vmax.max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric("fundamental harmonic vanishes; cannot normalize".into()));
    }
    HarmonicContent::from_raw(raw)
}

/// How E_C enters a harmonic fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcMode {
    /// Known charging energy; all observables go to the U_k.
    Fixed(f64),
    /// Fitted charging energy with this starting value.
    Free(f64),
}

impl EcMode {
    fn value(self) -> f64 {
        match self {
            Self::Fixed(v) | Self::Free(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub e_c: f64,
    pub e_c_fitted: bool,
    /// U_1 … U_K in GHz.
    pub u: Vec<f64>,
    pub content: HarmonicContent,
    /// Model minus data for f₀ₖ/k, GHz.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Fits U_1..U_K (and E_C when free) to observed lines f₀ₖ/k, k = 1..len.
/// The number of unknowns must not exceed the number of observables.
pub fn fit_harmonic_content(lines: &[f64], n_harmonics: usize, ec: EcMode, basis: ChargeBasis) -> Result<HarmonicFit> {
    let unknowns = n_harmonics + matches!(ec, EcMode::Free(_)) as usize;
    if n_harmonics == 0 {
        return Err(Error::Config("need at least one harmonic".into()));
    }
    if unknowns > lines.len() {
        return Err(Error::Config(format!(
            "{unknowns} unknowns from {} lines is under-determined; fix E_C or fit fewer harmonics",
            lines.len()
        )));
    }
    if lines.len() > 7 {
        return Err(Error::Config("at most 7 lines are supported".into()));
    }
    if !(ec.value() > 0.0) || lines.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Config("E_C and all lines must be positive".into()));
    }
    let ec0 = ec.value();
    // Transmon estimate ħω_p = f01 + E_C with ω_p = √(8 E_J E_C).
    let u1 = (lines[0] + ec0).powi(2) / (8.0 * ec0);
    let mut x0 = vec![u1];
    x0.extend(std::iter::repeat_n(0.0, n_harmonics - 1));
    let (mut lo, mut hi) = (vec![0.05 * u1], vec![20.0 * u1]);
    for _ in 1..n_harmonics {
        lo.push(-u1);
        hi.push(u1);
    }
    if let EcMode::Free(v) = ec {
        x0.push(v);
        lo.push(0.05 * v);
        hi.push(20.0 * v);
    }
    let split = |x: &[f64]| -> HarmonicSpec {
        let e_c = if matches!(ec, EcMode::Free(_)) { x[n_harmonics] } else { ec0 };
        HarmonicSpec { e_c, u: x[..n_harmonics].to_vec() }
    };
    let predict = |x: &[f64]| -> Result<Vec<f64>> {
        let s = harmonic_spectrum(&split(x), basis)?;
        (1..=lines.len())
            .map(|k| s.f0k_over_k(k).ok_or_else(|| Error::Numeric(format!("level {k} missing"))))
            .collect()
    };
    let objective = |x: &[f64]| -> Result<Vec<f64>> { Ok(predict(x)?.iter().zip(lines).map(|(m, d)| m - d).collect()) };
    let opts = LsqOptions { ftol: 1e-14, ..LsqOptions::default() };
    let rep = least_squares(objective, &x0, &Bounds::new(lo, hi), &opts)?;
    let spec = split(&rep.x);
    Ok(HarmonicFit {
        e_c: spec.e_c,
        e_c_fitted: matches!(ec, EcMode::Free(_)),
        content: HarmonicContent::from_raw(spec.u.clone())?,
        u: spec.u,
        residuals: rep.residuals,
        iterations: rep.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_and_kinked_potentials() {
        let c = potential_fourier(&|p: f64| -p.cos(), 4).unwrap();
        assert!((c.c[0] - 1.0).abs() < 1e-12 && c.c[1..].iter().all(|x| x.abs() < 1e-12));
        let k = potential_fourier(&|p: f64| -(p / 2.0).cos().abs(), 4).unwrap();
        assert!((k.c[1] + 0.2).abs() < 1e-6, "{:?}", k.c);
        // Fourier series of |cos(φ/2)|: ratios (−1)^{k+1}·3/(4k²−1).
        for kk in 1..=4 {
            let expect = if kk % 2 == 1 { 3.0 } else { -3.0 } / (4.0 * (kk * kk) as f64 - 1.0);
            assert!((k.c[kk - 1] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_in_the_potential() {
        let f = |p: f64| -(p.cos()) + 0.1 * (2.0 * p).cos();
        let g = |p: f64| (p / 2.0).cos().abs();
        let a = potential_fourier(&f, 3).unwrap().raw.unwrap();
        let b = potential_fourier(&g, 3).unwrap().raw.unwrap();
        let s = potential_fourier(&|p| 2.0 * f(p) - g(p), 3).unwrap().raw.unwrap();
        for k in 0..3 {
            assert!((s[k] - (2.0 * a[k] - b[k])).abs() < 1e-7);
        }
        assert!(potential_fourier(&|_| 1.0, 3).is_err());
    }

    #[test]
    fn harmonic_round_trip_and_guards() {
        let basis = ChargeBasis::new(15).unwrap();
        let truth = HarmonicSpec { e_c: 0.25, u: vec![15.0, 0.225, 0.165, 0.075] };
        let s = harmonic_spectrum(&truth, basis).unwrap();
        let lines: Vec<f64> = (1..=4).map(|k| s.f0k_over_k(k).unwrap()).collect();
        let fit = fit_harmonic_content(&lines, 4, EcMode::Fixed(0.25), basis).unwrap();
        for (got, want) in fit.content.c.iter().zip([1.0, 0.015, 0.011, 0.005]) {
            assert!((got - want).abs() < 1e-6, "{:?}", fit.content.c);
        }
        assert!(matches!(fit_harmonic_content(&lines, 4, EcMode::Free(0.25), basis), Err(Error::Config(_))));
        let free = fit_harmonic_content(&lines, 3, EcMode::Free(0.3), basis).unwrap();
        assert!(free.e_c > 0.0 && free.e_c_fitted);
    }
}
