//! Two junction modes in the (n₁, n₂) charge basis, optionally coupled to the
//! readout resonator.

use nalgebra::DMatrix;

use crate::circuit::{energies_full, resonator_inductive_energy, DeviceParams, EnergyRoute, EnergySetFull, FluxBias};
use crate::error::{Error, Result};
use crate::hilbert::{
    charge_matrix, eigensolve_real, kron_all, oscillator_zpf, resonator_charge_matrix, ChargeBasis, FockBasis,
    OperatorMatrix, RealEigen,
};

/// 4E_C1 n₁² + 4E_C2 n₂² + g₁₂ n₁n₂ − E_J1 cos φ₁ − E_J2 cos φ₂.
/// Index of |n₁, n₂⟩ is (n₁ + N_c)(2N_c + 1) + (n₂ + N_c).
pub fn two_mode_matrix(e: &EnergySetFull, ej1: f64, ej2: f64, basis: ChargeBasis) -> DMatrix<f64> {
    let d = basis.dim();
    let dim = d * d;
    let mut h = DMatrix::zeros(dim, dim);
    for a in 0..d {
        let n1 = basis.charge(a);
        for b in 0..d {
            let n2 = basis.charge(b);
            let i = a * d + b;
            h[(i, i)] = 4.0 * e.ec1 * n1 * n1 + 4.0 * e.ec2 * n2 * n2 + e.g12 * n1 * n2;
            if a + 1 < d {
                let j = (a + 1) * d + b;
                h[(i, j)] = -0.5 * ej1;
                h[(j, i)] = -0.5 * ej1;
            }
            if b + 1 < d {
                let j = a * d + b + 1;
                h[(i, j)] = -0.5 * ej2;
                h[(j, i)] = -0.5 * ej2;
            }
        }
    }
    h
}

/// Charge operators n₁ and n₂ embedded in the two-mode space.
pub fn two_mode_charge_operators(basis: ChargeBasis) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = charge_matrix(basis);
    let id = DMatrix::identity(basis.dim(), basis.dim());
    (kron_all(&[&n, &id]), kron_all(&[&id, &n]))
}

/// Junction-basis energies, E_J1 and E_J2(φ_e) at one flux point.
pub(crate) fn two_mode_inputs(params: &DeviceParams, flux: FluxBias) -> Result<(EnergySetFull, f64, f64)> {
    let e = energies_full(params, EnergyRoute::MatrixInverse)?;
    Ok((e, params.ej1, params.squid(flux).ej2))
}

/// Inductive energy of the resonator inferred from its bare frequency.
pub(crate) fn resonator_el(params: &DeviceParams, e: &EnergySetFull) -> Result<f64> {
    resonator_inductive_energy(params.f_res_bare, e.ecr)
}

/// Qubit-sector Hamiltonian, or the full product with the resonator when
/// `resonator` is given.
pub fn build_two_mode(
    params: &DeviceParams,
    flux: FluxBias,
    basis: ChargeBasis,
    resonator: Option<FockBasis>,
) -> Result<OperatorMatrix> {
    let (e, ej1, ej2) = two_mode_inputs(params, flux)?;
    let h = match resonator {
        None => two_mode_matrix(&e, ej1, ej2, basis),
        Some(fock) => full_product_matrix(&e, ej1, ej2, resonator_el(params, &e)?, basis, fock)?,
    };
    OperatorMatrix::from_real(h)
}

/// Largest product-space dimension the full resonator model will build.
pub const FULL_PRODUCT_MAX_DIM: usize = 8000;

/// Two junction modes ⊗ resonator Fock space, ordered (n₁, n₂, k).
pub fn full_product_matrix(
    e: &EnergySetFull,
    ej1: f64,
    ej2: f64,
    e_l: f64,
    basis: ChargeBasis,
    fock: FockBasis,
) -> Result<DMatrix<f64>> {
    let dim = basis.dim() * basis.dim() * fock.dim();
    if dim > FULL_PRODUCT_MAX_DIM {
        return Err(Error::Config(format!(
            "full product space has dimension {dim} (limit {FULL_PRODUCT_MAX_DIM}); lower N_c or N_f"
        )));
    }
    let qubit = two_mode_matrix(e, ej1, ej2, basis);
    let (n1, n2) = two_mode_charge_operators(basis);
    let nr = resonator_charge_matrix(fock, e.ecr, e_l);
    let omega = (8.0 * e.ecr * e_l).sqrt();
    let osc = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(fock.dim(), |k, _| omega * (k as f64 + 0.5)));
    let iq = DMatrix::identity(qubit.nrows(), qubit.nrows());
    let ir = DMatrix::identity(fock.dim(), fock.dim());
    let coupling = n1 * e.g1r + n2 * e.g2r;
    Ok(kron_all(&[&qubit, &ir]) + kron_all(&[&iq, &osc]) + kron_all(&[&coupling, &nr]))
}

/// Lowest eigenpairs of the qubit-sector two-mode Hamiltonian.
pub fn solve_two_mode(e: &EnergySetFull, ej1: f64, ej2: f64, basis: ChargeBasis, levels: usize) -> Result<RealEigen> {
    eigensolve_real(&two_mode_matrix(e, ej1, ej2, basis), levels)
}

/// Resonator Hamiltonian in the basis of the lowest M two-mode eigenstates
/// times M Fock states: Σ E_a|a⟩⟨a| + ω(k + ½) + (g₁ᵣN₁ + g₂ᵣN₂) ⊗ n_r,
/// with N_k the charge matrix elements between kept eigenstates.
pub fn dressed_matrix(
    qubit: &RealEigen,
    basis: ChargeBasis,
    e: &EnergySetFull,
    e_l: f64,
    fock: FockBasis,
) -> DMatrix<f64> {
    let m = qubit.values.len();
    let (n1, n2) = two_mode_charge_operators(basis);
    let u = &qubit.vectors;
    let coupling = u.transpose() * (n1 * e.g1r + n2 * e.g2r) * u;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&qubit.values));
    let nr = resonator_charge_matrix(fock, e.ecr, e_l);
    let omega = (8.0 * e.ecr * e_l).sqrt();
    let osc = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(fock.dim(), |k, _| omega * (k as f64 + 0.5)));
    let ir = DMatrix::identity(fock.dim(), fock.dim());
    let iq = DMatrix::identity(m, m);
    kron_all(&[&diag, &ir]) + kron_all(&[&iq, &osc]) + kron_all(&[&coupling, &nr])
}

/// Zero-point charge scale of the bare resonator.
pub fn resonator_n_zpf(e: &EnergySetFull, e_l: f64) -> f64 {
    oscillator_zpf(e.ecr, e_l).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DeviceParams;
    use crate::hilbert::eigensolve;

    #[test]
    fn hermitian_and_real() {
        let p = DeviceParams::cd2();
        let h = build_two_mode(&p, FluxBias::from_phi0(0.2), ChargeBasis::new(6).unwrap(), None).unwrap();
        assert!(h.is_hermitian());
        assert!(h.hermiticity_error() < 1e-12);
        assert_eq!(h.dim(), 169);
    }

    #[test]
    fn separable_limit_is_a_tensor_sum() {
        let basis = ChargeBasis::new(8).unwrap();
        let e = EnergySetFull { ec1: 0.3, ec2: 0.25, ecr: 0.016, g12: 0.0, g1r: 0.0, g2r: 0.0 };
        let two = solve_two_mode(&e, 25.0, 40.0, basis, 6).unwrap();
        let single = |ec: f64, ej: f64| {
            let n = charge_matrix(basis);
            let c = crate::hilbert::cos_k_phi_matrix(basis, 1).unwrap();
            eigensolve_real(&(&n * &n * (4.0 * ec) - c * ej), 4).unwrap().values
        };
        let (a, b) = (single(0.3, 25.0), single(0.25, 40.0));
        let mut sums: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect();
        sums.sort_by(f64::total_cmp);
        for (x, y) in two.values.iter().zip(&sums) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn full_product_is_guarded_and_hermitian() {
        let p = DeviceParams::cd1();
        let h = build_two_mode(&p, FluxBias::from_phi0(0.0), ChargeBasis::new(3).unwrap(), Some(FockBasis::new(3).unwrap()))
            .unwrap();
        assert_eq!(h.dim(), 49 * 3);
        assert!(eigensolve(&h, 3).is_ok());
        let (e, ej1, ej2) = two_mode_inputs(&p, FluxBias::from_phi0(0.0)).unwrap();
        let el = resonator_el(&p, &e).unwrap();
        let huge = full_product_matrix(&e, ej1, ej2, el, ChargeBasis::new(20).unwrap(), FockBasis::new(8).unwrap());
        assert!(matches!(huge, Err(Error::Config(_))));
    }

    #[test]
    fn hierarchical_resonator_matches_full_product() {
        let p = DeviceParams::cd1();
        let basis = ChargeBasis::new(6).unwrap();
        let fock = FockBasis::new(5).unwrap();
        let (e, ej1, ej2) = two_mode_inputs(&p, FluxBias::from_phi0(0.1)).unwrap();
        let el = resonator_el(&p, &e).unwrap();
        let full = eigensolve_real(&full_product_matrix(&e, ej1, ej2, el, basis, fock).unwrap(), 6).unwrap();
        let qubit = solve_two_mode(&e, ej1, ej2, basis, 60).unwrap();
        let dressed = eigensolve_real(&dressed_matrix(&qubit, basis, &e, el, fock), 6).unwrap();
        for (a, b) in full.values.iter().zip(&dressed.values) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
