//! Dispersive shift of the readout resonator split into qubit-mode and
//! internal-mode contributions.
//!
//! Only the (1,0) and (0,1) virtual transitions enter; contributions of
//! higher levels are not summed.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{resonator_inductive_energy, DeviceParams, FluxBias};
use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::models::{solve_labeled_two_mode, two_mode_charge_operators, TwoModeSolution, Truncation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveConfig {
    /// Smallest |f_r − f_ij| (GHz) for which a shift is reported.
    pub delta_min: f64,
}

impl Default for DispersiveConfig {
    fn default() -> Self {
        Self { delta_min: 0.05 }
    }
}

/// μ_{ij,k} = ⟨i_q j_int| n_k |0_q 0_int⟩ for k = 1, 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeMatrixElements {
    pub mu10: [Complex64; 2],
    pub mu01: [Complex64; 2],
    /// ⟨0 0|n_k|0 0⟩, zero by charge parity.
    pub mu00: [Complex64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiResult {
    pub flux: FluxBias,
    /// GHz, signed.
    pub chi_q: f64,
    pub chi_int: f64,
    pub chi_0: f64,
    /// f_r − f_10 and f_r − f_01 (GHz).
    pub delta_10: f64,
    pub delta_01: f64,
    pub f_r: f64,
    pub mu: ChargeMatrixElements,
}

fn element(sol: &TwoModeSolution, op: &nalgebra::DMatrix<f64>, a: usize, b: usize) -> Complex64 {
    let va = sol.vectors.column(a);
    let vb = sol.vectors.column(b);
    Complex64::new(va.dot(&(op * vb)), 0.0)
}

fn required_level(sol: &TwoModeSolution, iq: usize, jint: usize) -> Result<usize> {
    let flux_phi0 = sol.flux.phi0();
    let idx = sol.find(iq, jint).ok_or_else(|| Error::AmbiguousLabels {
        flux_phi0,
        detail: format!("state ({iq},{jint}) not identified"),
    })?;
    let label = sol.labels[idx].expect("found index carries a label");
    if label.ambiguous {
        return Err(Error::AmbiguousLabels {
            flux_phi0,
            detail: format!("state ({iq},{jint}) overlap {:.3} below threshold", label.overlap),
        });
    }
    Ok(idx)
}

fn elements_from(sol: &TwoModeSolution) -> Result<(ChargeMatrixElements, usize, usize, usize)> {
    let g = required_level(sol, 0, 0)?;
    let q = required_level(sol, 1, 0)?;
    let i = required_level(sol, 0, 1)?;
    let (n1, n2) = two_mode_charge_operators(sol.basis);
    let mu = ChargeMatrixElements {
        mu10: [element(sol, &n1, q, g), element(sol, &n2, q, g)],
        mu01: [element(sol, &n1, i, g), element(sol, &n2, i, g)],
        mu00: [element(sol, &n1, g, g), element(sol, &n2, g, g)],
    };
    Ok((mu, g, q, i))
}

/// Charge matrix elements between labeled two-mode eigenstates. Fails with
/// [`Error::AmbiguousLabels`] when (0,0), (1,0) or (0,1) cannot be
/// identified cleanly.
pub fn charge_matrix_elements(params: &DeviceParams, flux: FluxBias, trunc: &Truncation) -> Result<ChargeMatrixElements> {
    let sol = solve_labeled_two_mode(params, flux, trunc)?;
    Ok(elements_from(&sol)?.0)
}

/// χ_q, χ_int and their sum at one flux point.
pub fn chi_components(params: &DeviceParams, flux: FluxBias, trunc: &Truncation, cfg: &DispersiveConfig) -> Result<ChiResult> {
    params.validate()?;
    let sol = solve_labeled_two_mode(params, flux, trunc)?;
    let (mu, g, q, i) = elements_from(&sol)?;
    let e = &sol.energies;
    let e_l = resonator_inductive_energy(params.f_res_bare, e.ecr)?;
    let f_r = (8.0 * e.ecr * e_l).sqrt();
    let delta_10 = f_r - (sol.values[q] - sol.values[g]);
    let delta_01 = f_r - (sol.values[i] - sol.values[g]);
    for d in [delta_10, delta_01] {
        if d.abs() < cfg.delta_min {
            return Err(Error::DispersiveBreakdown { flux_phi0: flux.phi0(), detuning_ghz: d.abs() });
        }
    }
    let pref = f_r / (16.0 * e.ecr);
    let chi_q = pref * (mu.mu10[0] * e.g1r + mu.mu10[1] * e.g2r).norm_sqr() / delta_10;
    let chi_int = pref * (mu.mu01[0] * e.g1r + mu.mu01[1] * e.g2r).norm_sqr() / delta_01;
    Ok(ChiResult { flux, chi_q, chi_int, chi_0: chi_q + chi_int, delta_10, delta_01, f_r, mu })
}

/// One row of a dispersive sweep. Flagged rows carry a reason and no numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub flux_phi0: f64,
    pub result: Option<ChiResult>,
    pub flag: Option<String>,
}

impl ChiRow {
    pub fn flagged(&self) -> bool {
        self.flag.is_some()
    }
}

fn is_flag(e: &Error) -> bool {
    matches!(e, Error::AmbiguousLabels { .. } | Error::DispersiveBreakdown { .. })
}

fn chi_row(params: &DeviceParams, flux_phi0: f64, trunc: &Truncation, cfg: &DispersiveConfig) -> Result<ChiRow> {
    match chi_components(params, FluxBias::from_phi0(flux_phi0), trunc, cfg) {
        Ok(r) => Ok(ChiRow { flux_phi0, result: Some(r), flag: None }),
        Err(e) if is_flag(&e) => Ok(ChiRow { flux_phi0, result: None, flag: Some(e.to_string()) }),
        Err(e) => Err(e),
    }
}

/// χ over a flux grid (Φ₀). Avoided-crossing and small-detuning points are
/// flagged rather than evaluated.
pub fn chi_sweep(params: &DeviceParams, fluxes_phi0: &[f64], trunc: &Truncation, cfg: &DispersiveConfig) -> Result<Vec<ChiRow>> {
    crate::par_map(fluxes_phi0, |&f| chi_row(params, f, trunc, cfg)).into_iter().collect()
}

pub const CHI_CSV_HEADER: [&str; 5] = ["phi_e_phi0", "chi_q_MHz", "chi_int_MHz", "chi_0_MHz", "flagged"];

pub fn write_chi_csv<W: Write>(out: W, rows: &[ChiRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CHI_CSV_HEADER)?;
    for r in rows {
        let (q, i, z) = match &r.result {
            Some(c) => (sig9(c.chi_q * 1e3), sig9(c.chi_int * 1e3), sig9(c.chi_0 * 1e3)),
            None => Default::default(),
        };
        w.write_record([sig9(r.flux_phi0), q, i, z, if r.flagged() { "1".into() } else { "0".into() }])?;
    }
    w.flush()?;
    Ok(())
}

/// Located zero of the total dispersive shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiZero {
    pub flux: FluxBias,
    /// Final bracket in Φ₀.
    pub bracket: (f64, f64),
    /// Number of sign changes seen on the coarse grid.
    pub sign_changes: usize,
}

/// Root tolerance in Φ₀.
pub const CHI_ZERO_TOL_PHI0: f64 = 1e-5;
const COARSE_STEP_PHI0: f64 = 0.01;

/// Lowest-flux zero of χ₀ in (`lo`, `hi`) Φ₀. Sign changes across flagged
/// points or across a pole of χ are not zeros and are skipped.
pub fn find_chi_zero(
    params: &DeviceParams,
    lo: f64,
    hi: f64,
    trunc: &Truncation,
    cfg: &DispersiveConfig,
) -> Result<ChiZero> {
    params.validate()?;
    if params.cg == 0.0 {
        return Err(Error::Degenerate("C_g = 0: the dispersive shift vanishes identically".into()));
    }
    if !(hi > lo) {
        return Err(Error::Config(format!("empty flux range ({lo}, {hi})")));
    }
    let n = (((hi - lo) / COARSE_STEP_PHI0).ceil() as usize).max(2) + 1;
    let grid = crate::models::flux_grid(lo, hi, n)?;
    let rows = chi_sweep(params, &grid, trunc, cfg)?;
    let chi0 = |f: f64| -> Result<Option<f64>> { Ok(chi_row(params, f, trunc, cfg)?.result.map(|r| r.chi_0)) };

    let mut candidates = vec![];
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (&w[0].result, &w[1].result) {
            if a.chi_0 == 0.0 {
                candidates.push((w[0].flux_phi0, w[0].flux_phi0, a.chi_0, a.chi_0));
            } else if a.chi_0.signum() != b.chi_0.signum() && b.chi_0 != 0.0 {
                candidates.push((w[0].flux_phi0, w[1].flux_phi0, a.chi_0, b.chi_0));
            }
        }
    }
    let sign_changes = candidates.len();
    'outer: for (mut a, mut b, mut fa, fb) in candidates {
        let scale = fa.abs().max(fb.abs());
        while b - a > CHI_ZERO_TOL_PHI0 {
            let m = 0.5 * (a + b);
            let Some(fm) = chi0(m)? else { continue 'outer };
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let root = 0.5 * (a + b);
        // A pole of χ also changes sign; a zero must leave |χ₀| small.
        let Some(at_root) = chi0(root)? else { continue };
        if at_root.abs() < 1e-2 * scale {
            return Ok(ChiZero { flux: FluxBias::from_phi0(root), bracket: (a, b), sign_changes });
        }
    }
    Err(Error::NotFound(format!("no zero of the total dispersive shift in ({lo}, {hi}) Phi0")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_gives_zero_shift() {
        let p = DeviceParams { cg: 0.0, ..DeviceParams::cd1() };
        let r = chi_components(&p, FluxBias::from_phi0(0.0), &Truncation::default(), &DispersiveConfig::default()).unwrap();
        assert_eq!(r.chi_q, 0.0);
        assert_eq!(r.chi_int, 0.0);
        let err = find_chi_zero(&p, 0.0, 0.45, &Truncation::default(), &DispersiveConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn cd1_structure_at_zero_flux() {
        let p = DeviceParams::cd1();
        let r = chi_components(&p, FluxBias::from_phi0(0.0), &Truncation::default(), &DispersiveConfig::default()).unwrap();
        assert_eq!(r.chi_0, r.chi_q + r.chi_int);
        assert!(r.chi_q.signum() == -r.chi_int.signum());
        assert!(r.chi_q.abs() > r.chi_int.abs());
        assert!(r.mu.mu00[0].norm() < 1e-12 && r.mu.mu00[1].norm() < 1e-12);
        assert!((r.f_r - p.f_res_bare).abs() < 1e-12);
    }

    #[test]
    fn breakdown_guard() {
        let p = DeviceParams::cd1();
        let cfg = DispersiveConfig { delta_min: 100.0 };
        let err = chi_components(&p, FluxBias::from_phi0(0.0), &Truncation::default(), &cfg).unwrap_err();
        assert!(matches!(err, Error::DispersiveBreakdown { .. }));
        let rows = chi_sweep(&p, &[0.0], &Truncation::default(), &cfg).unwrap();
        assert!(rows[0].flagged() && rows[0].result.is_none());
        let mut buf = Vec::new();
        write_chi_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "phi_e_phi0,chi_q_MHz,chi_int_MHz,chi_0_MHz,flagged\n0,,,,1\n");
    }
}
