//! Single-mode models: Born–Oppenheimer, reduced and phenomenological
//! harmonic transmon.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{energies_bo, DeviceParams, EnergyRoute, FluxBias, SquidParams};
use crate::error::{Error, Result};
use crate::hilbert::{charge_matrix, cos_k_phi_matrix, eigensolve_real, ChargeBasis, OperatorMatrix, RealEigen};

/// √(1 − λ sin²(φ/2)).
fn envelope(phi: f64, lambda: f64) -> f64 {
    let s = (0.5 * phi).sin();
    (1.0 - lambda * s * s).max(0.0).sqrt()
}

/// Classically minimized series-junction potential −E_JΣ√(1 − λ sin²(φ/2)).
pub fn reduced_potential(phi_q: f64, squid: &SquidParams) -> f64 {
    -squid.ej_sigma * envelope(phi_q, squid.lambda)
}

/// Curvature of the junction potential along the internal coordinate at
/// fixed φ_q, E_JΣ√(1 − λ sin²(φ_q/2)).
pub fn internal_mode_stiffness(phi_q: f64, squid: &SquidParams) -> f64 {
    squid.ej_sigma * envelope(phi_q, squid.lambda)
}

/// Ground-state energy of the internal mode at fixed φ_q: the reduced
/// potential plus the zero-point energy √(2E_Cint K(φ_q)) of the fast mode.
pub fn bo_potential(phi_q: f64, squid: &SquidParams, e_cint: f64) -> f64 {
    let k = internal_mode_stiffness(phi_q, squid);
    reduced_potential(phi_q, squid) + (2.0 * e_cint * k).sqrt()
}

/// The same expression with the zero-point term subtracted. Kept to document
/// that it does not reproduce the two-mode spectrum.
pub fn bo_potential_subtracted(phi_q: f64, squid: &SquidParams, e_cint: f64) -> f64 {
    let k = internal_mode_stiffness(phi_q, squid);
    reduced_potential(phi_q, squid) - (2.0 * e_cint * k).sqrt()
}

const GL_ORDER: usize = 24;

/// Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// Panel edges in w, graded toward w = 0 (φ = π) where the potential can
/// have a kink or a square-root point.
fn panels() -> impl Iterator<Item = (f64, f64)> {
    let graded = [0.0, 1.0 / 256.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0];
    let edges: Vec<f64> = graded.into_iter().chain((2..=16).map(|i| i as f64 / 16.0)).collect();
    (0..edges.len() - 1).map(move |i| (edges[i], edges[i + 1]))
}

/// Cosine-series coefficients v₀ … v_kmax of an even 2π-periodic potential,
/// V(φ) = v₀ + Σ v_k cos kφ.
///
/// Integrates over [0, π] with φ = π(1 − w²), which regularizes |cos(φ/2)|
/// and √|cos(φ/2)| behaviour at φ = π.
pub fn even_cosine_coefficients(v: &dyn Fn(f64) -> f64, kmax: usize) -> Vec<f64> {
    let (xs, ws) = gauss_legendre();
    let mut coeffs = vec![0.0; kmax + 1];
    for (a, b) in panels() {
        let half = 0.5 * (b - a);
        for (x, wt) in xs.iter().zip(ws) {
            let w = a + half * (x + 1.0);
            let phi = PI * (1.0 - w * w);
            let jac = 2.0 * PI * w * half * wt;
            let val = v(phi) * jac;
            // cos(kφ) by recurrence.
            let c1 = phi.cos();
            let (mut cm, mut c) = (1.0, c1);
            coeffs[0] += val;
            for ck in coeffs.iter_mut().skip(1) {
                *ck += val * c;
                let next = 2.0 * c1 * c - cm;
                cm = c;
                c = next;
            }
        }
    }
    coeffs[0] /= PI;
    for ck in coeffs.iter_mut().skip(1) {
        *ck *= 2.0 / PI;
    }
    coeffs
}

/// 4E_C n² + v₀ + Σ_{k ≤ K} v_k cos kφ in the charge basis.
pub fn one_d_matrix(e_c: f64, coeffs: &[f64], basis: ChargeBasis) -> Result<DMatrix<f64>> {
    let n = charge_matrix(basis);
    let d = basis.dim();
    let mut h = &n * &n * (4.0 * e_c) + DMatrix::identity(d, d) * coeffs.first().copied().unwrap_or(0.0);
    for (k, &vk) in coeffs.iter().enumerate().skip(1) {
        if vk != 0.0 {
            h += cos_k_phi_matrix(basis, k)? * vk;
        }
    }
    Ok(h)
}

/// Transition change allowed between K_pot and K_pot + 5 harmonics.
pub const FOURIER_TOL_GHZ: f64 = 1e-6;
const FOURIER_STEP: usize = 5;
/// Levels compared in the Fourier convergence check.
const CHECKED_LEVELS: usize = 5;

#[derive(Clone, Debug)]
pub struct OneDSolution {
    pub eig: RealEigen,
    /// Number of cosine harmonics actually kept.
    pub k_used: usize,
}

/// Diagonalizes 4E_C n² + V(φ) with V expanded in cosines. Starts at
/// `k_pot` harmonics and adds five at a time until the low transitions stop
/// moving; errors if the basis runs out of harmonics first.
pub fn solve_one_d(
    e_c: f64,
    potential: &dyn Fn(f64) -> f64,
    basis: ChargeBasis,
    k_pot: usize,
    levels: usize,
) -> Result<OneDSolution> {
    if !(e_c > 0.0) || !e_c.is_finite() {
        return Err(Error::ParameterDomain(format!("charging energy must be > 0, got {e_c}")));
    }
    if k_pot == 0 {
        return Err(Error::Config("K_pot must be >= 1".into()));
    }
    let kmax = 2 * basis.cutoff();
    let coeffs = even_cosine_coefficients(potential, kmax);
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("potential has non-finite Fourier coefficients".into()));
    }
    let solve = |k: usize| -> Result<RealEigen> {
        let h = one_d_matrix(e_c, &coeffs[..=k.min(kmax)], basis)?;
        eigensolve_real(&h, levels.max(CHECKED_LEVELS))
    };
    let mut k = k_pot.min(kmax);
    let mut current = solve(k)?;
    while k < kmax {
        let k_next = (k + FOURIER_STEP).min(kmax);
        let next = solve(k_next)?;
        let shift = (1..CHECKED_LEVELS.min(next.values.len()))
            .map(|i| ((next.values[i] - next.values[0]) - (current.values[i] - current.values[0])).abs())
            .fold(0.0, f64::max);
        k = k_next;
        current = next;
        if shift <= FOURIER_TOL_GHZ {
            return Ok(OneDSolution { eig: truncate(current, levels), k_used: k });
        }
        if k == kmax {
            return Err(Error::Config(format!(
                "potential Fourier series not converged at {kmax} harmonics (shift {shift:.3e} GHz); raise N_c"
            )));
        }
    }
    Ok(OneDSolution { eig: truncate(current, levels), k_used: k })
}

fn truncate(mut e: RealEigen, levels: usize) -> RealEigen {
    let k = levels.min(e.values.len());
    e.values.truncate(k);
    e.vectors = e.vectors.columns(0, k).into_owned();
    e
}

/// Which single-mode potential to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OneDKind {
    BornOppenheimer,
    Reduced,
}

/// E_Cq, SQUID parameters and E_Cint at one flux point.
pub(crate) fn one_d_inputs(params: &DeviceParams, flux: FluxBias) -> Result<(f64, SquidParams, f64)> {
    let e = energies_bo(params, EnergyRoute::MatrixInverse)?;
    Ok((e.ecq, params.squid(flux), e.ecint))
}

pub(crate) fn solve_flux_one_d(
    kind: OneDKind,
    params: &DeviceParams,
    flux: FluxBias,
    basis: ChargeBasis,
    k_pot: usize,
    levels: usize,
) -> Result<OneDSolution> {
    let (ecq, squid, ecint) = one_d_inputs(params, flux)?;
    match kind {
        OneDKind::BornOppenheimer => solve_one_d(ecq, &|p| bo_potential(p, &squid, ecint), basis, k_pot, levels),
        OneDKind::Reduced => solve_one_d(ecq, &|p| reduced_potential(p, &squid), basis, k_pot, levels),
    }
}

fn build_one_d(kind: OneDKind, params: &DeviceParams, flux: FluxBias, basis: ChargeBasis, k_pot: usize) -> Result<OperatorMatrix> {
    let (ecq, squid, ecint) = one_d_inputs(params, flux)?;
    // Run the convergence check so an under-resolved series is reported.
    let sol = solve_flux_one_d(kind, params, flux, basis, k_pot, CHECKED_LEVELS)?;
    let coeffs = match kind {
        OneDKind::BornOppenheimer => even_cosine_coefficients(&|p| bo_potential(p, &squid, ecint), sol.k_used),
        OneDKind::Reduced => even_cosine_coefficients(&|p| reduced_potential(p, &squid), sol.k_used),
    };
    OperatorMatrix::from_real(one_d_matrix(ecq, &coeffs, basis)?)
}

/// 4E_Cq n² + E₀(φ_q), qubit sector only.
pub fn build_bo(params: &DeviceParams, flux: FluxBias, basis: ChargeBasis, k_pot: usize) -> Result<OperatorMatrix> {
    build_one_d(OneDKind::BornOppenheimer, params, flux, basis, k_pot)
}

/// 4E_Cq n² − E_JΣ√(1 − λ sin²(φ_q/2)).
pub fn build_reduced(params: &DeviceParams, flux: FluxBias, basis: ChargeBasis, k_pot: usize) -> Result<OperatorMatrix> {
    build_one_d(OneDKind::Reduced, params, flux, basis, k_pot)
}

/// H = 4E_C n² − Σ_k U_k cos(kφ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpec {
    pub e_c: f64,
    /// U_1 … U_K in GHz.
    pub u: Vec<f64>,
}

impl HarmonicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_c > 0.0) || !self.e_c.is_finite() {
            return Err(Error::ParameterDomain(format!("E_C must be > 0, got {}", self.e_c)));
        }
        match self.u.first() {
            None => Err(Error::ParameterDomain("at least one harmonic is required".into())),
            Some(&u1) if u1 == 0.0 || !u1.is_finite() => Err(Error::ParameterDomain("U_1 must be finite and nonzero".into())),
            _ if self.u.iter().any(|u| !u.is_finite()) => Err(Error::ParameterDomain("harmonics must be finite".into())),
            _ => Ok(()),
        }
    }
}

pub(crate) fn harmonic_matrix(spec: &HarmonicSpec, basis: ChargeBasis) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut coeffs = vec![0.0];
    coeffs.extend(spec.u.iter().map(|u| -u));
    one_d_matrix(spec.e_c, &coeffs, basis)
}

pub fn build_harmonic_transmon(spec: &HarmonicSpec, basis: ChargeBasis) -> Result<OperatorMatrix> {
    OperatorMatrix::from_real(harmonic_matrix(spec, basis)?)
}
