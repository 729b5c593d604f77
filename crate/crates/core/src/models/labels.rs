//! Assigns (i_q, j_int) labels to two-mode eigenstates by overlap with
//! Born–Oppenheimer product states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::one_d::{internal_mode_stiffness, solve_flux_one_d, OneDKind};
use crate::circuit::{DeviceParams, FluxBias, SquidParams};
use crate::error::Result;
use crate::hilbert::ChargeBasis;

/// A label whose overlap falls below this is flagged ambiguous.
pub const AMBIGUOUS_OVERLAP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub iq: usize,
    pub jint: usize,
    /// |⟨reference|state⟩|².
    pub overlap: f64,
    pub ambiguous: bool,
}

impl StateLabel {
    /// Charge parity (−1)^(i+j) of the labeled product state.
    pub fn parity(&self) -> i8 {
        if (self.iq + self.jint).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// A normalized reference vector in the two-mode charge basis.
#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub iq: usize,
    pub jint: usize,
    pub coeffs: DVector<Complex64>,
}

/// Greedy one-to-one assignment on an overlap table (rows = states,
/// columns = references): repeatedly take the largest remaining entry.
pub fn assign_by_overlap(overlaps: &DMatrix<f64>) -> Vec<Option<(usize, f64)>> {
    let (rows, cols) = overlaps.shape();
    let mut entries: Vec<(f64, usize, usize)> =
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| (overlaps[(r, c)], r, c)).collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; rows];
    let mut used = vec![false; cols];
    for (ov, r, c) in entries {
        if out[r].is_none() && !used[c] {
            out[r] = Some((c, ov));
            used[c] = true;
        }
    }
    out
}

/// Labels each column of `vectors` with the reference it overlaps most,
/// subject to a one-to-one assignment.
pub fn label_states(vectors: &DMatrix<f64>, refs: &[ReferenceState]) -> Vec<Option<StateLabel>> {
    let overlaps = DMatrix::from_fn(vectors.ncols(), refs.len(), |s, r| {
        let v = vectors.column(s);
        let amp: Complex64 = refs[r].coeffs.iter().zip(v.iter()).map(|(c, &x)| c.conj() * x).sum();
        amp.norm_sqr()
    });
    assign_by_overlap(&overlaps)
        .into_iter()
        .map(|a| {
            a.map(|(r, overlap)| StateLabel {
                iq: refs[r].iq,
                jint: refs[r].jint,
                overlap,
                ambiguous: overlap < AMBIGUOUS_OVERLAP,
            })
        })
        .collect()
}

/// Normalized Hermite functions h_0 … h_jmax at ξ.
fn hermite_functions(xi: f64, jmax: usize, out: &mut [f64]) {
    out[0] = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if jmax >= 1 {
        out[1] = 2f64.sqrt() * xi * out[0];
    }
    for j in 1..jmax {
        out[j + 1] = (2.0 / (j + 1) as f64).sqrt() * xi * out[j] - (j as f64 / (j + 1) as f64).sqrt() * out[j - 1];
    }
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Minimum of −E_J1 cos φ₁ − E_J2 cos φ₂ along φ₁ + φ₂ = φ_q: returns φ₂*.
fn phi2_star(phi_q: f64, ej1: f64, ej2: f64) -> f64 {
    let phi1 = (ej2 * phi_q.sin()).atan2(ej1 + ej2 * phi_q.cos());
    phi_q - phi1
}

/// Stiffness floor as a fraction of E_JΣ, so the internal Gaussian stays
/// finite at the matched-junction point φ_q = π.
const STIFFNESS_FLOOR: f64 = 0.02;

fn grid_size(basis: ChargeBasis) -> usize {
    let mut g = 64;
    while g < 2 * basis.dim() {
        g *= 2;
    }
    g
}

/// Product states ψ_i(φ_q) χ_j(δ) for i ≤ `max_iq`, j ≤ `max_jint`, with ψ_i
/// the Born–Oppenheimer eigenstates, χ_j oscillator states of the internal
/// mode and δ the internal displacement φ₂ − φ₂*(φ_q), expressed in the
/// two-mode charge basis.
pub fn bo_reference_states(
    params: &DeviceParams,
    flux: FluxBias,
    basis: ChargeBasis,
    max_iq: usize,
    max_jint: usize,
    k_pot: usize,
) -> Result<Vec<ReferenceState>> {
    let sol = solve_flux_one_d(OneDKind::BornOppenheimer, params, flux, basis, k_pot, max_iq + 1)?;
    let squid: SquidParams = params.squid(flux);
    let ecint = crate::circuit::energies_bo(params, crate::circuit::EnergyRoute::MatrixInverse)?.ecint;
    let (ej1, ej2) = (params.ej1, squid.ej2);

    let g = grid_size(basis);
    let d = basis.dim();
    let nc = basis.cutoff() as i64;
    let step = 2.0 * PI / g as f64;
    // e^{-i n θ_a} for θ_a = 2πa/g.
    let phase = DMatrix::from_fn(d, g, |n, a| {
        let m = n as i64 - nc;
        Complex64::from_polar(1.0, -(m as f64) * step * a as f64)
    });

    // χ_j on the (q, b) grid where φ_q = q·step and φ₂ = b·step.
    let mut chi = vec![vec![0.0; g * g]; max_jint + 1];
    let mut h = vec![0.0; max_jint + 1];
    for q in 0..g {
        let phi_q = q as f64 * step;
        let k = internal_mode_stiffness(phi_q, &squid).max(STIFFNESS_FLOOR * squid.ej_sigma);
        let s = (2.0 * ecint / k).powf(0.25);
        let norm = 1.0 / (2f64.sqrt() * s).sqrt();
        let p2 = phi2_star(phi_q, ej1, ej2);
        for b in 0..g {
            let delta = wrap(b as f64 * step - p2);
            hermite_functions(delta / (2f64.sqrt() * s), max_jint, &mut h);
            for j in 0..=max_jint {
                chi[j][q * g + b] = norm * h[j];
            }
        }
    }

    let mut refs = Vec::with_capacity((max_iq + 1) * (max_jint + 1));
    let mut grid = vec![Complex64::new(0.0, 0.0); g * g];
    for i in 0..=max_iq.min(sol.eig.values.len().saturating_sub(1)) {
        let coeffs = sol.eig.vectors.column(i);
        let psi: Vec<Complex64> = (0..g)
            .map(|q| {
                let th = q as f64 * step;
                coeffs.iter().enumerate().map(|(n, &c)| Complex64::from_polar(c, (n as i64 - nc) as f64 * th)).sum()
            })
            .collect();
        for (j, chi_j) in chi.iter().enumerate() {
            // Ψ(a, b) with a = φ₁ index, φ_q index q = a + b mod g.
            for a in 0..g {
                for b in 0..g {
                    let q = (a + b) % g;
                    grid[a * g + b] = psi[q] * chi_j[q * g + b];
                }
            }
            // Separable DFT onto n₂ then n₁.
            let mut partial = DMatrix::<Complex64>::zeros(g, d);
            for a in 0..g {
                for n2 in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..g {
                        acc += grid[a * g + b] * phase[(n2, b)];
                    }
                    partial[(a, n2)] = acc;
                }
            }
            let mut c = DVector::<Complex64>::zeros(d * d);
            for n1 in 0..d {
                for n2 in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..g {
                        acc += partial[(a, n2)] * phase[(n1, a)];
                    }
                    c[n1 * d + n2] = acc;
                }
            }
            let norm = c.norm();
            if norm > 0.0 {
                c /= Complex64::new(norm, 0.0);
            }
            refs.push(ReferenceState { iq: i, jint: j, coeffs: c });
        }
    }
    Ok(refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_functions_orthonormal() {
        let n = 4000;
        let (lo, hi) = (-12.0, 12.0);
        let dx = (hi - lo) / n as f64;
        let mut gram = [[0.0; 5]; 5];
        let mut h = [0.0; 5];
        for i in 0..=n {
            hermite_functions(lo + i as f64 * dx, 4, &mut h);
            for a in 0..5 {
                for b in 0..5 {
                    gram[a][b] += h[a] * h[b] * dx;
                }
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn greedy_assignment_is_a_bijection() {
        let o = DMatrix::from_row_slice(3, 3, &[0.9, 0.8, 0.0, 0.95, 0.1, 0.0, 0.0, 0.0, 0.3]);
        let a = assign_by_overlap(&o);
        assert_eq!(a[1].unwrap().0, 0);
        assert_eq!(a[0].unwrap().0, 1);
        assert_eq!(a[2].unwrap().0, 2);
    }

    #[test]
    fn minimum_of_series_pair() {
        assert!(phi2_star(0.0, 10.0, 20.0).abs() < 1e-15);
        // Weaker junction takes most of the phase.
        let p2 = phi2_star(1.0, 30.0, 10.0);
        assert!(p2 > 0.5);
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12 || (wrap(3.0 * PI) + PI).abs() < 1e-12);
    }
}
