//! Charge- and Fock-basis operators, tensor embedding, Hermitian eigensolves.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Charge states n ∈ [−N_c, N_c].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChargeBasis {
    cutoff: usize,
}

impl ChargeBasis {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Config("charge cutoff N_c must be >= 1".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn cutoff(self) -> usize {
        self.cutoff
    }

    pub fn dim(self) -> usize {
        2 * self.cutoff + 1
    }

    /// Charge value of basis index i.
    pub fn charge(self, i: usize) -> f64 {
        i as f64 - self.cutoff as f64
    }
}

/// Oscillator number states |0⟩ … |N_f − 1⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockBasis {
    cutoff: usize,
}

impl FockBasis {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::Config("Fock cutoff N_f must be >= 2".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn dim(self) -> usize {
        self.cutoff
    }
}

/// Dense complex square matrix with a checked Hermitian flag.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    mat: DMatrix<Complex64>,
    hermitian: bool,
}

/// Absolute tolerance used for the Hermitian flag, relative to max(1, max|A_ij|).
pub const HERMITIAN_TOL: f64 = 1e-12;

impl OperatorMatrix {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Contract(format!("operator must be square, got {}x{}", mat.nrows(), mat.ncols())));
        }
        let scale = mat.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        let hermitian = hermiticity_error(&mat) < HERMITIAN_TOL * scale;
        Ok(Self { mat, hermitian })
    }

    pub fn from_real(mat: DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    /// max_ij |A_ij − conj(A_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    /// Real part, provided every imaginary part vanishes exactly.
    pub fn as_real(&self) -> Option<DMatrix<f64>> {
        self.mat.iter().all(|z| z.im == 0.0).then(|| self.mat.map(|z| z.re))
    }
}

fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Real diagonal matrix diag(−N_c … N_c).
pub fn charge_matrix(basis: ChargeBasis) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_fn(basis.dim(), |i, _| basis.charge(i)))
}

/// Real matrix of cos(kφ): ½ on the ±k off-diagonals.
pub fn cos_k_phi_matrix(basis: ChargeBasis, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::ParameterDomain("cos(k phi) needs k >= 1".into()));
    }
    if k > 2 * basis.cutoff() {
        return Err(Error::Config(format!(
            "harmonic k = {k} exceeds the charge basis (N_c = {})",
            basis.cutoff()
        )));
    }
    let d = basis.dim();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d - k {
        m[(i, i + k)] = 0.5;
        m[(i + k, i)] = 0.5;
    }
    Ok(m)
}

pub fn charge_op(basis: ChargeBasis) -> OperatorMatrix {
    OperatorMatrix::from_real(charge_matrix(basis)).expect("diagonal matrix is square")
}

/// cos(kφ) in the charge basis. k must be positive.
pub fn cos_k_phi_op(basis: ChargeBasis, k: i64) -> Result<OperatorMatrix> {
    if k <= 0 {
        return Err(Error::ParameterDomain(format!("cos(k phi) needs k >= 1, got {k}")));
    }
    OperatorMatrix::from_real(cos_k_phi_matrix(basis, k as usize)?)
}

/// Zero-point scales (n_zpf, φ_zpf) of an oscillator with 4E_C n² + (E_L/2)φ².
pub fn oscillator_zpf(e_c: f64, e_l: f64) -> (f64, f64) {
    ((e_l / (32.0 * e_c)).powf(0.25), (2.0 * e_c / e_l).powf(0.25))
}

/// Real matrix n_zpf (a + a†).
pub fn resonator_charge_matrix(basis: FockBasis, e_c: f64, e_l: f64) -> DMatrix<f64> {
    let (n_zpf, _) = oscillator_zpf(e_c, e_l);
    let d = basis.dim();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let v = n_zpf * ((i + 1) as f64).sqrt();
        m[(i, i + 1)] = v;
        m[(i + 1, i)] = v;
    }
    m
}

/// Oscillator quadratures (n_r, φ_r) with n_r = n_zpf(a + a†) and
/// φ_r = i φ_zpf (a − a†), so that [φ_r, n_r] = i and
/// 4E_C n_r² + (E_L/2) φ_r² = √(8E_C E_L)(a†a + ½).
pub fn resonator_ops(basis: FockBasis, e_c: f64, e_l: f64) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if !(e_c > 0.0) || !(e_l > 0.0) {
        return Err(Error::ParameterDomain(format!("resonator energies must be > 0 (E_C = {e_c}, E_L = {e_l})")));
    }
    let (_, phi_zpf) = oscillator_zpf(e_c, e_l);
    let d = basis.dim();
    let n = OperatorMatrix::from_real(resonator_charge_matrix(basis, e_c, e_l))?;
    let mut phi = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let v = phi_zpf * ((i + 1) as f64).sqrt();
        // a has √(i+1) at (i, i+1); a† at (i+1, i).
        phi[(i, i + 1)] = Complex64::new(0.0, v);
        phi[(i + 1, i)] = Complex64::new(0.0, -v);
    }
    Ok((n, OperatorMatrix::new(phi)?))
}

/// Embeds operators acting on individual factors of a product space.
/// `placed` pairs a factor index with its operator; unlisted factors get the
/// identity. Operators on the same factor are multiplied in list order.
pub fn tensor(dims: &[usize], placed: &[(usize, &OperatorMatrix)]) -> Result<OperatorMatrix> {
    if dims.is_empty() {
        return Err(Error::Contract("tensor needs at least one factor".into()));
    }
    let mut factors: Vec<DMatrix<Complex64>> = dims.iter().map(|&d| DMatrix::identity(d, d)).collect();
    for &(slot, op) in placed {
        let Some(&d) = dims.get(slot) else {
            return Err(Error::Contract(format!("factor {slot} out of range ({} factors)", dims.len())));
        };
        if op.dim() != d {
            return Err(Error::Contract(format!("factor {slot} has dimension {d}, operator has {}", op.dim())));
        }
        factors[slot] = &factors[slot] * op.matrix();
    }
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.kronecker(f);
    }
    OperatorMatrix::new(acc)
}

/// Real Kronecker product of a list of factors.
pub fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.kronecker(*f);
    }
    acc
}

/// Lowest eigenpairs of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column j is the eigenvector of `values[j]`.
    pub vectors: DMatrix<Complex64>,
}

/// Lowest eigenpairs of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct RealEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Lowest `num_levels` eigenpairs, ascending. Real input takes a real
/// symmetric path.
pub fn eigensolve(h: &OperatorMatrix, num_levels: usize) -> Result<Eigen> {
    if !h.is_hermitian() {
        return Err(Error::Contract(format!(
            "eigensolve needs a Hermitian operator (max |A - A^H| = {:.3e})",
            h.hermiticity_error()
        )));
    }
    if let Some(real) = h.as_real() {
        let e = eigensolve_real(&real, num_levels)?;
        return Ok(Eigen { values: e.values, vectors: e.vectors.map(|x| Complex64::new(x, 0.0)) });
    }
    complex_eigensolve(h.matrix(), num_levels)
}

fn complex_eigensolve(m: &DMatrix<Complex64>, num_levels: usize) -> Result<Eigen> {
    let n = m.nrows();
    let k = num_levels.min(n);
    let fm = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        // Symmetrize to keep the solver on exactly Hermitian data.
        let a = m[(i, j)];
        let b = m[(j, i)].conj();
        faer::c64::new(0.5 * (a.re + b.re), 0.5 * (a.im + b.im))
    });
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numeric(format!("Hermitian eigensolve failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..k).map(|i| s[i].re).collect();
    let vectors = DMatrix::from_fn(n, k, |i, j| {
        let z = u[(i, j)];
        Complex64::new(z.re, z.im)
    });
    Ok(Eigen { values, vectors })
}

fn dense_real_eigensolve(m: &DMatrix<f64>, k: usize) -> Result<RealEigen> {
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numeric(format!("symmetric eigensolve failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let k = k.min(n);
    Ok(RealEigen {
        values: (0..k).map(|i| s[i]).collect(),
        vectors: DMatrix::from_fn(n, k, |i, j| u[(i, j)]),
    })
}

/// Dimension above which a reflection-symmetric matrix is split into its
/// even and odd blocks before solving.
const PARITY_SPLIT_MIN_DIM: usize = 32;

/// True when H commutes with the index reversal i → N−1−i.
fn reversal_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    let tol = 1e-13 * scale;
    for j in 0..n {
        for i in 0..n {
            if (m[(i, j)] - m[(n - 1 - i, n - 1 - j)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Lowest eigenpairs of a real symmetric matrix. Matrices symmetric under
/// index reversal (charge parity n → −n in a Kronecker charge basis) are
/// solved block by block.
pub fn eigensolve_real(m: &DMatrix<f64>, num_levels: usize) -> Result<RealEigen> {
    if !m.is_square() {
        return Err(Error::Contract("eigensolve needs a square matrix".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(RealEigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix contains non-finite entries".into()));
    }
    let k = num_levels.min(n);
    if n < PARITY_SPLIT_MIN_DIM || !reversal_symmetric(m) {
        return dense_real_eigensolve(m, k);
    }

    let half = n / 2;
    let center = (n % 2 == 1).then_some(half);
    let r = |i: usize| n - 1 - i;
    let ne = half + usize::from(center.is_some());
    let sqrt2 = std::f64::consts::SQRT_2;
    let even = DMatrix::from_fn(ne, ne, |i, j| match (i < half, j < half) {
        (true, true) => m[(i, j)] + m[(i, r(j))],
        (true, false) => sqrt2 * m[(i, half)],
        (false, true) => sqrt2 * m[(half, j)],
        (false, false) => m[(half, half)],
    });
    let odd = DMatrix::from_fn(half, half, |i, j| m[(i, j)] - m[(i, r(j))]);

    let ee = dense_real_eigensolve(&even, k)?;
    let eo = if half > 0 { dense_real_eigensolve(&odd, k)? } else { RealEigen { values: vec![], vectors: DMatrix::zeros(0, 0) } };

    // Merge the two ascending lists.
    let mut order: Vec<(f64, bool, usize)> = ee
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, true, i))
        .chain(eo.values.iter().enumerate().map(|(i, &v)| (v, false, i)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    order.truncate(k);

    let inv = 1.0 / sqrt2;
    let mut vectors = DMatrix::zeros(n, k);
    for (col, &(_, is_even, idx)) in order.iter().enumerate() {
        if is_even {
            for i in 0..half {
                let c = ee.vectors[(i, idx)] * inv;
                vectors[(i, col)] = c;
                vectors[(r(i), col)] = c;
            }
            if let Some(c) = center {
                vectors[(c, col)] = ee.vectors[(half, idx)];
            }
        } else {
            for i in 0..half {
                let c = eo.vectors[(i, idx)] * inv;
                vectors[(i, col)] = c;
                vectors[(r(i), col)] = -c;
            }
        }
    }
    Ok(RealEigen { values: order.iter().map(|o| o.0).collect(), vectors })
}

/// Parity (+1 even, −1 odd) of a vector under index reversal, if definite.
pub fn reversal_parity(v: &[f64]) -> Option<i8> {
    let n = v.len();
    let (mut sym, mut anti) = (0.0, 0.0);
    for i in 0..n {
        sym += (v[i] - v[n - 1 - i]).powi(2);
        anti += (v[i] + v[n - 1 - i]).powi(2);
    }
    if sym < 1e-16 {
        Some(1)
    } else if anti < 1e-16 {
        Some(-1)
    } else {
        None
    }
}
