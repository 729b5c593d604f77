//! Device parameters, capacitance matrices and closed-form circuit energies.
//!
//! Units throughout: energies are E/h in GHz, capacitances in fF, phases in
//! radians. The resonator self-capacitance is carried in pF to match the
//! device-parameter files and converted on access.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants (exact SI values) and the derived charging-energy scale.
pub mod units {
    pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
    pub const PLANCK: f64 = 6.62607015e-34;
    const FEMTOFARAD: f64 = 1e-15;
    const GIGA: f64 = 1e9;

    /// e²/(2 · 1 fF)/h in GHz (≈ 19.37). Divide by a capacitance in fF to get
    /// a charging energy in GHz.
    pub const CHARGING_GHZ_FF: f64 =
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * FEMTOFARAD) / PLANCK / GIGA;
}

use units::CHARGING_GHZ_FF;

/// Charging energy e²/2C of a single capacitance (fF) in GHz.
pub fn island_charging_energy(c_ff: f64) -> Result<f64> {
    if !(c_ff > 0.0) || !c_ff.is_finite() {
        return Err(Error::ParameterDomain(format!("capacitance must be > 0, got {c_ff} fF")));
    }
    Ok(CHARGING_GHZ_FF / c_ff)
}

/// Circuit constants of one cooldown. Field names on disk follow the
/// device-parameter table columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Island capacitance to ground.
    #[serde(rename = "C_fF")]
    pub c: f64,
    /// Josephson energy of the single junction.
    #[serde(rename = "EJ1_GHz")]
    pub ej1: f64,
    #[serde(rename = "CJ1_fF")]
    pub cj1: f64,
    /// SQUID junction A.
    #[serde(rename = "EJA_GHz")]
    pub eja: f64,
    #[serde(rename = "CJA_fF")]
    pub cja: f64,
    /// SQUID junction B.
    #[serde(rename = "EJB_GHz")]
    pub ejb: f64,
    #[serde(rename = "CJB_fF")]
    pub cjb: f64,
    #[serde(rename = "fres_bare_GHz")]
    pub f_res_bare: f64,
    /// Qubit-resonator coupling capacitance. Zero decouples the resonator.
    #[serde(rename = "Cg_fF")]
    pub cg: f64,
    #[serde(rename = "Cr_pF")]
    pub cr_pf: f64,
}

const CD1_JSON: &str = include_str!("../../../fixtures/cd1.json");
const CD2_JSON: &str = include_str!("../../../fixtures/cd2.json");

impl DeviceParams {
    /// First-cooldown reference parameters.
    pub fn cd1() -> Self {
        serde_json::from_str(CD1_JSON).expect("bundled cd1.json is valid")
    }

    /// Second-cooldown reference parameters (aged junctions, CD1 capacitances).
    pub fn cd2() -> Self {
        serde_json::from_str(CD2_JSON).expect("bundled cd2.json is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: DeviceParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("C_fF", self.c),
            ("CJ1_fF", self.cj1),
            ("CJA_fF", self.cja),
            ("CJB_fF", self.cjb),
            ("Cr_pF", self.cr_pf),
            ("EJ1_GHz", self.ej1),
            ("EJA_GHz", self.eja),
            ("EJB_GHz", self.ejb),
            ("fres_bare_GHz", self.f_res_bare),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParameterDomain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.cg >= 0.0) || !self.cg.is_finite() {
            return Err(Error::ParameterDomain(format!("Cg_fF must be finite and >= 0, got {}", self.cg)));
        }
        Ok(())
    }

    /// Total SQUID capacitance; the two SQUID junctions sit in parallel.
    pub fn cj2(&self) -> f64 {
        self.cja + self.cjb
    }

    pub fn cr_ff(&self) -> f64 {
        self.cr_pf * 1e3
    }

    /// Flux-dependent SQUID energy together with λ and E_JΣ.
    pub fn squid(&self, flux: FluxBias) -> SquidParams {
        let ej2 = squid_effective_ej(self.eja, self.ejb, flux);
        lambda_and_sigma(self.ej1, ej2)
    }
}

/// Reduced external flux φ_e = 2πΦ_e/Φ₀ threading the SQUID loop.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FluxBias {
    phi_e: f64,
}

impl FluxBias {
    pub fn from_radians(phi_e: f64) -> Self {
        debug_assert!(phi_e.is_finite());
        Self { phi_e }
    }

    /// Flux in units of the flux quantum.
    pub fn from_phi0(phi0_units: f64) -> Self {
        Self::from_radians(2.0 * PI * phi0_units)
    }

    pub fn radians(self) -> f64 {
        self.phi_e
    }

    pub fn phi0(self) -> f64 {
        self.phi_e / (2.0 * PI)
    }
}

/// Effective Josephson energy of an asymmetric SQUID,
/// √(E_A² + E_B² + 2 E_A E_B cos φ_e).
///
/// The accompanying shift of the potential minimum is absorbed into the
/// junction phase, so only the magnitude enters the Hamiltonian.
pub fn squid_effective_ej(eja: f64, ejb: f64, flux: FluxBias) -> f64 {
    let sq = eja * eja + ejb * ejb + 2.0 * eja * ejb * flux.radians().cos();
    sq.max(0.0).sqrt()
}

/// Series combination of the single junction and the SQUID.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    pub ej2: f64,
    /// Junction-matching parameter 4 E_J1 E_J2 / E_JΣ², in [0, 1].
    pub lambda: f64,
    pub ej_sigma: f64,
}

pub fn lambda_and_sigma(ej1: f64, ej2: f64) -> SquidParams {
    let ej_sigma = ej1 + ej2;
    let lambda = if ej_sigma > 0.0 {
        (4.0 * ej1 * ej2 / (ej_sigma * ej_sigma)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    SquidParams { ej2, lambda, ej_sigma }
}

/// Inductive energy E_L such that √(8 E_Cr E_L) reproduces the bare
/// resonator frequency.
pub fn resonator_inductive_energy(f_res_bare: f64, e_cr: f64) -> Result<f64> {
    if !(f_res_bare > 0.0) || !(e_cr > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "resonator frequency and charging energy must be > 0 (f = {f_res_bare}, E_Cr = {e_cr})"
        )));
    }
    Ok(f_res_bare * f_res_bare / (8.0 * e_cr))
}

/// Capacitance matrix in the (Φ₁, Φ₂, Φ_r) basis, fF.
pub fn capacitance_matrix_junction_basis(p: &DeviceParams) -> Result<Matrix3<f64>> {
    p.validate()?;
    let (c, cg) = (p.c, p.cg);
    Ok(Matrix3::new(
        c + p.cj1 + cg, c + cg, -cg,
        c + cg, c + p.cj2() + cg, -cg,
        -cg, -cg, p.cr_ff() + cg,
    ))
}

/// Capacitance matrix in the (Φ_q, Φ_int, Φ_r) basis, fF.
pub fn capacitance_matrix_bo_basis(p: &DeviceParams) -> Result<Matrix3<f64>> {
    p.validate()?;
    let (cj1, cj2, cg) = (p.cj1, p.cj2(), p.cg);
    let series = cj1 * cj2 / (cj1 + cj2);
    Ok(Matrix3::new(
        p.c + series + cg, 0.0, -cg,
        0.0, cj1 + cj2, 0.0,
        -cg, 0.0, p.cr_ff() + cg,
    ))
}

/// Linear map M with (φ₁, φ₂, φ_r)ᵀ = M (φ_q, φ_int, φ_r)ᵀ.
pub fn bo_to_junction_map(p: &DeviceParams) -> Matrix3<f64> {
    let s = p.cj1 + p.cj2();
    Matrix3::new(
        p.cj2() / s, -1.0, 0.0,
        p.cj1 / s, 1.0, 0.0,
        0.0, 0.0, 1.0,
    )
}

/// Kinetic energy ½ v̇ᵀ ℂ v̇ for flux velocities v̇ (arbitrary units).
pub fn kinetic_energy(cap: &Matrix3<f64>, velocity: &Vector3<f64>) -> f64 {
    0.5 * velocity.dot(&(cap * velocity))
}

/// Which algebraic route evaluates the charging energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyRoute {
    /// The closed forms as printed (C₁, C₂ read as C_J1, C_J2).
    Formula,
    /// (e²/2)[ℂ⁻¹]_ii and 4e²[ℂ⁻¹]_ij.
    #[default]
    MatrixInverse,
}

/// Charging energies and couplings of the junction-basis Hamiltonian, GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySetFull {
    pub ec1: f64,
    pub ec2: f64,
    pub ecr: f64,
    pub g12: f64,
    pub g1r: f64,
    pub g2r: f64,
}

/// Charging energies and coupling in the qubit/internal-mode basis, GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySetBO {
    pub ecq: f64,
    pub ecint: f64,
    pub ecr: f64,
    pub g: f64,
}

fn inverse(cap: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    cap.try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::Numeric("capacitance matrix is singular".into()))
}

/// C′ = C + C_g C_r/(C_g + C_r) and C″ = C + C_J1 C_J2/(C_J1 + C_J2).
fn primed_capacitances(p: &DeviceParams) -> (f64, f64) {
    let cr = p.cr_ff();
    let c_prime = p.c + p.cg * cr / (p.cg + cr);
    let c_dprime = p.c + p.cj1 * p.cj2() / (p.cj1 + p.cj2());
    (c_prime, c_dprime)
}

pub fn energies_full(p: &DeviceParams, route: EnergyRoute) -> Result<EnergySetFull> {
    let k = CHARGING_GHZ_FF;
    match route {
        EnergyRoute::MatrixInverse => {
            let inv = inverse(&capacitance_matrix_junction_basis(p)?)?;
            Ok(EnergySetFull {
                ec1: k * inv[(0, 0)],
                ec2: k * inv[(1, 1)],
                ecr: k * inv[(2, 2)],
                g12: 8.0 * k * inv[(0, 1)],
                g1r: 8.0 * k * inv[(0, 2)],
                g2r: 8.0 * k * inv[(1, 2)],
            })
        }
        EnergyRoute::Formula => {
            p.validate()?;
            let (cj1, cj2, cg, cr) = (p.cj1, p.cj2(), p.cg, p.cr_ff());
            let (c_prime, c_dprime) = primed_capacitances(p);
            let denom = c_prime * (cj1 + cj2) + cj1 * cj2;
            Ok(EnergySetFull {
                ec1: k * (p.c + cj2) / denom,
                ec2: k * (p.c + cj1) / denom,
                ecr: k * (c_dprime + cg) / (c_dprime * (cg + cr) + cg * cr),
                g12: -8.0 * k * c_prime / denom,
                g1r: 8.0 * k * cj2 * cg / ((cg + cr) * denom),
                g2r: 8.0 * k * cj1 * cg / ((cg + cr) * denom),
            })
        }
    }
}

pub fn energies_bo(p: &DeviceParams, route: EnergyRoute) -> Result<EnergySetBO> {
    let k = CHARGING_GHZ_FF;
    match route {
        EnergyRoute::MatrixInverse => {
            let inv = inverse(&capacitance_matrix_bo_basis(p)?)?;
            Ok(EnergySetBO {
                ecq: k * inv[(0, 0)],
                ecint: k * inv[(1, 1)],
                ecr: k * inv[(2, 2)],
                g: 8.0 * k * inv[(0, 2)],
            })
        }
        EnergyRoute::Formula => {
            p.validate()?;
            let (cg, cr) = (p.cg, p.cr_ff());
            let (c_prime, c_dprime) = primed_capacitances(p);
            let sum = c_prime + c_dprime;
            Ok(EnergySetBO {
                ecq: k / sum,
                ecint: k / (p.cj1 + p.cj2()),
                ecr: k * (c_dprime + cg) / (sum * (cg + cr)),
                g: 8.0 * k * cg / (sum * (cg + cr)),
            })
        }
    }
}

/// One quantity where the closed form and the matrix inverse disagree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormulaDiscrepancy {
    pub basis: &'static str,
    pub quantity: &'static str,
    pub formula: f64,
    pub matrix_inverse: f64,
    pub relative: f64,
}

/// Relative tolerance below which the two routes count as agreeing.
pub const FORMULA_AGREEMENT_TOL: f64 = 1e-9;

/// Compares every closed-form energy with the matrix-inverse value and
/// returns the ones that differ by more than [`FORMULA_AGREEMENT_TOL`].
/// The matrix inverse is the authoritative route.
pub fn formula_discrepancies(p: &DeviceParams) -> Result<Vec<FormulaDiscrepancy>> {
    let ff = energies_full(p, EnergyRoute::Formula)?;
    let fi = energies_full(p, EnergyRoute::MatrixInverse)?;
    let bf = energies_bo(p, EnergyRoute::Formula)?;
    let bi = energies_bo(p, EnergyRoute::MatrixInverse)?;
    let pairs = [
        ("full", "E_C1", ff.ec1, fi.ec1),
        ("full", "E_C2", ff.ec2, fi.ec2),
        ("full", "E_Cr", ff.ecr, fi.ecr),
        ("full", "g12", ff.g12, fi.g12),
        ("full", "g1r", ff.g1r, fi.g1r),
        ("full", "g2r", ff.g2r, fi.g2r),
        ("bo", "E_Cq", bf.ecq, bi.ecq),
        ("bo", "E_Cint", bf.ecint, bi.ecint),
        ("bo", "E_Cr", bf.ecr, bi.ecr),
        ("bo", "g", bf.g, bi.g),
    ];
    Ok(pairs
        .into_iter()
        .filter_map(|(basis, quantity, formula, matrix_inverse)| {
            let scale = matrix_inverse.abs().max(formula.abs());
            let relative = if scale == 0.0 { 0.0 } else { (formula - matrix_inverse).abs() / scale };
            (relative > FORMULA_AGREEMENT_TOL).then_some(FormulaDiscrepancy {
                basis,
                quantity,
                formula,
                matrix_inverse,
                relative,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn charging_constant_from_codata() {
        assert_relative_eq!(CHARGING_GHZ_FF, 19.3702, max_relative = 1e-5);
        let ec = island_charging_energy(63.3).unwrap();
        assert!((ec - 0.306).abs() < 1e-3);
    }

    #[test]
    fn junction_matrix_cd1_layout() {
        let p = DeviceParams::cd1();
        let m = capacitance_matrix_junction_basis(&p).unwrap();
        assert_relative_eq!(p.cj2(), 60.1, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 0)], 63.3 + 27.8 + 7.3, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)], 63.3 + 60.1 + 7.3, epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], 63.3 + 7.3, epsilon = 1e-12);
        assert_relative_eq!(m[(2, 2)], 1207.3, epsilon = 1e-9);
        assert_eq!(m[(0, 2)], -7.3);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn zero_coupling_decouples_resonator() {
        let p = DeviceParams { cg: 0.0, ..DeviceParams::cd1() };
        let m = capacitance_matrix_junction_basis(&p).unwrap();
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        let e = energies_full(&p, EnergyRoute::MatrixInverse).unwrap();
        assert_eq!(e.g1r, 0.0);
        assert_eq!(e.g2r, 0.0);
        let b = energies_bo(&p, EnergyRoute::MatrixInverse).unwrap();
        assert_eq!(b.g, 0.0);
    }

    #[test]
    fn bo_matrix_structure() {
        let p = DeviceParams::cd1();
        let m = capacitance_matrix_bo_basis(&p).unwrap();
        let expected = 63.3 + 27.8 * 60.1 / (27.8 + 60.1) + 7.3;
        assert_relative_eq!(m[(0, 0)], expected, epsilon = 1e-12);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_relative_eq!(m[(1, 1)], 87.9, epsilon = 1e-12);

        let sym = DeviceParams { cja: 13.9, cjb: 13.9, ..p };
        let m = capacitance_matrix_bo_basis(&sym).unwrap();
        assert_relative_eq!(m[(1, 1)], 2.0 * 27.8, epsilon = 1e-12);
    }

    #[test]
    fn internal_mode_charging_energy() {
        let b = energies_bo(&DeviceParams::cd1(), EnergyRoute::MatrixInverse).unwrap();
        assert_relative_eq!(b.ecint, CHARGING_GHZ_FF / 87.9, max_relative = 1e-12);
        assert!((b.ecint - 0.2203).abs() < 1e-4);
    }

    #[test]
    fn non_positive_capacitance_rejected() {
        let p = DeviceParams { c: 0.0, ..DeviceParams::cd1() };
        assert!(matches!(capacitance_matrix_junction_basis(&p), Err(Error::ParameterDomain(_))));
        let p = DeviceParams { cj1: -1.0, ..DeviceParams::cd1() };
        assert!(matches!(energies_bo(&p, EnergyRoute::Formula), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn squid_limits() {
        let zero = FluxBias::from_phi0(0.0);
        assert_relative_eq!(squid_effective_ej(30.0, 22.2, zero), 52.2, epsilon = 1e-12);
        assert!(squid_effective_ej(10.0, 10.0, FluxBias::from_phi0(0.5)) < 1e-6);
        let cd2 = DeviceParams::cd2();
        let s = cd2.squid(FluxBias::from_phi0(0.31));
        assert!((s.ej2 - 30.0).abs() < 0.1, "ej2 = {}", s.ej2);
        assert!((s.lambda - 0.98).abs() < 0.01, "lambda = {}", s.lambda);
    }

    #[test]
    fn lambda_limits() {
        assert_relative_eq!(lambda_and_sigma(12.0, 12.0).lambda, 1.0, epsilon = 1e-15);
        assert!(lambda_and_sigma(12.0, 1e-9).lambda < 1e-9);
        let s = lambda_and_sigma(23.4, 30.0);
        assert_relative_eq!(s.ej_sigma, 53.4, epsilon = 1e-12);
    }

    #[test]
    fn inductive_energy_round_trip() {
        let b = energies_bo(&DeviceParams::cd1(), EnergyRoute::MatrixInverse).unwrap();
        let el = resonator_inductive_energy(6.3783, b.ecr).unwrap();
        assert!(el > 0.0);
        let f = (8.0 * b.ecr * el).sqrt();
        assert_relative_eq!(f, 6.3783, max_relative = 1e-12);
        let el2 = resonator_inductive_energy(6.3783, 2.0 * b.ecr).unwrap();
        assert_relative_eq!(el2, el / 2.0, max_relative = 1e-14);
        assert!(resonator_inductive_energy(0.0, 1.0).is_err());
    }

    #[test]
    fn printed_forms_that_agree_with_the_inverse() {
        let p = DeviceParams::cd1();
        let found = formula_discrepancies(&p).unwrap();
        let names: Vec<_> = found.iter().map(|d| (d.basis, d.quantity)).collect();
        for ok in [("full", "E_Cr"), ("full", "g12"), ("full", "g1r"), ("full", "g2r"), ("bo", "E_Cint")] {
            assert!(!names.contains(&ok), "{ok:?} unexpectedly disagrees");
        }
        // E_C1/E_C2 use C where the inverse gives C'; E_Cq counts C twice.
        for bad in [("full", "E_C1"), ("full", "E_C2"), ("bo", "E_Cq")] {
            assert!(names.contains(&bad), "{bad:?} expected in discrepancy log");
        }
    }

    #[test]
    fn json_keys_match_table_columns() {
        let p = DeviceParams::cd2();
        let v: serde_json::Value = serde_json::from_str(&p.to_json_string()).unwrap();
        for key in ["C_fF", "EJ1_GHz", "CJ1_fF", "EJA_GHz", "CJA_fF", "EJB_GHz", "CJB_fF", "fres_bare_GHz", "Cg_fF", "Cr_pF"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(DeviceParams::from_json_str(r#"{"C_fF": 1}"#).is_err());
    }
}
