//! Spectral models of the device and their flux sweeps.

mod labels;
mod one_d;
mod two_mode;

use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use labels::{assign_by_overlap, bo_reference_states, label_states, ReferenceState, StateLabel, AMBIGUOUS_OVERLAP};
pub use one_d::{
    bo_potential, bo_potential_subtracted, build_bo, build_harmonic_transmon, build_reduced, even_cosine_coefficients,
    internal_mode_stiffness, one_d_matrix, reduced_potential, solve_one_d, HarmonicSpec, OneDKind, OneDSolution,
    FOURIER_TOL_GHZ,
};
pub use two_mode::{
    build_two_mode, dressed_matrix, full_product_matrix, resonator_n_zpf, solve_two_mode, two_mode_charge_operators,
    two_mode_matrix, FULL_PRODUCT_MAX_DIM,
};

use crate::circuit::{DeviceParams, EnergySetFull, FluxBias};
use crate::error::{Error, Result};
use crate::fmt::{opt_sig9, sig9};
use crate::hilbert::{eigensolve_real, ChargeBasis, FockBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TwoMode,
    TwoModeWithResonator,
    BornOppenheimer,
    Reduced,
    HarmonicTransmon,
}

impl ModelKind {
    pub const FLUX_MODELS: [ModelKind; 3] = [ModelKind::TwoMode, ModelKind::BornOppenheimer, ModelKind::Reduced];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TwoMode => "two-mode",
            ModelKind::TwoModeWithResonator => "two-mode-resonator",
            ModelKind::BornOppenheimer => "bo",
            ModelKind::Reduced => "reduced",
            ModelKind::HarmonicTransmon => "harmonic",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-mode" | "twomode" => Ok(ModelKind::TwoMode),
            "two-mode-resonator" | "two-mode-with-resonator" => Ok(ModelKind::TwoModeWithResonator),
            "bo" | "born-oppenheimer" | "bornoppenheimer" => Ok(ModelKind::BornOppenheimer),
            "reduced" => Ok(ModelKind::Reduced),
            "harmonic" | "harmonic-transmon" => Ok(ModelKind::HarmonicTransmon),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected two-mode, two-mode-resonator, bo, reduced or harmonic)"
            ))),
        }
    }
}

/// Basis sizes and expansion orders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Charge cutoff per junction mode.
    pub nc: usize,
    /// Resonator Fock states.
    pub nf: usize,
    /// Cosine harmonics of the 1D potentials before the convergence check.
    pub k_pot: usize,
    /// Two-mode eigenstates kept when the resonator is added on top.
    pub dressed_levels: usize,
    /// Diagonalize the resonator model in the full product space instead.
    pub full_product: bool,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { nc: 15, nf: 8, k_pot: 20, dressed_levels: 24, full_product: false }
    }
}

impl Truncation {
    /// Defaults for the full product resonator model, which needs a smaller
    /// charge cutoff to stay tractable.
    pub fn full_product() -> Self {
        Self { nc: 10, full_product: true, ..Self::default() }
    }

    pub fn with_nc(self, nc: usize) -> Self {
        Self { nc, ..self }
    }

    pub fn with_nf(self, nf: usize) -> Self {
        Self { nf, ..self }
    }

    pub fn charge_basis(&self) -> Result<ChargeBasis> {
        ChargeBasis::new(self.nc)
    }

    pub fn fock_basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.nf)
    }
}

/// Levels and transitions of one model at one flux point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub flux: FluxBias,
    pub model: ModelKind,
    /// Ascending, ground-referenced.
    pub levels: Vec<f64>,
    /// f01, f02, f03, f04 (undivided).
    pub transitions: [Option<f64>; 4],
    /// First internal-mode excitation, two-mode models only.
    pub f_int: Option<f64>,
    /// f12 − f01.
    pub anharmonicity: Option<f64>,
    /// Per-level labels, two-mode models only.
    pub labels: Vec<Option<StateLabel>>,
    /// Dressed resonator frequency, resonator model only.
    pub f_res: Option<f64>,
}

impl SpectrumResult {
    /// f_0k for k = 1..=4.
    pub fn f0k(&self, k: usize) -> Option<f64> {
        self.transitions.get(k.checked_sub(1)?).copied().flatten()
    }

    /// f_0k / k, the quantity read off a two-tone spectrum.
    pub fn f0k_over_k(&self, k: usize) -> Option<f64> {
        self.f0k(k).map(|f| f / k as f64)
    }

    pub fn any_ambiguous(&self) -> bool {
        self.labels.iter().flatten().any(|l| l.ambiguous)
    }

    fn from_levels(flux: FluxBias, model: ModelKind, absolute: &[f64]) -> Self {
        let e0 = absolute[0];
        let levels: Vec<f64> = absolute.iter().map(|e| e - e0).collect();
        let mut transitions = [None; 4];
        for (k, t) in transitions.iter_mut().enumerate() {
            *t = levels.get(k + 1).copied();
        }
        let anharmonicity = match (transitions[0], transitions[1]) {
            (Some(f1), Some(f2)) => Some(f2 - 2.0 * f1),
            _ => None,
        };
        Self { flux, model, levels, transitions, f_int: None, anharmonicity, labels: vec![], f_res: None }
    }
}

/// Two-mode eigenstates computed by [`solve_labeled_two_mode`].
pub const TWO_MODE_LEVELS: usize = 16;
const LABEL_MAX_IQ: usize = 7;
const LABEL_MAX_JINT: usize = 2;

/// Labeled qubit-sector eigenstates of the two-mode model.
#[derive(Clone, Debug)]
pub struct TwoModeSolution {
    pub flux: FluxBias,
    pub basis: ChargeBasis,
    pub energies: EnergySetFull,
    /// Absolute eigenvalues, ascending.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub labels: Vec<Option<StateLabel>>,
}

impl TwoModeSolution {
    /// Level index carrying label (i_q, j_int).
    pub fn find(&self, iq: usize, jint: usize) -> Option<usize> {
        self.labels.iter().position(|l| matches!(l, Some(l) if l.iq == iq && l.jint == jint))
    }

    pub fn label(&self, iq: usize, jint: usize) -> Option<StateLabel> {
        self.find(iq, jint).and_then(|i| self.labels[i])
    }

    /// E(i_q, j_int) − E(0, 0).
    pub fn transition(&self, iq: usize, jint: usize) -> Option<f64> {
        let g = self.find(0, 0)?;
        Some(self.values[self.find(iq, jint)?] - self.values[g])
    }
}

pub fn solve_labeled_two_mode_levels(
    params: &DeviceParams,
    flux: FluxBias,
    trunc: &Truncation,
    levels: usize,
) -> Result<TwoModeSolution> {
    let basis = trunc.charge_basis()?;
    let (e, ej1, ej2) = two_mode::two_mode_inputs(params, flux)?;
    let eig = solve_two_mode(&e, ej1, ej2, basis, levels.max(TWO_MODE_LEVELS))?;
    let refs = bo_reference_states(params, flux, basis, LABEL_MAX_IQ, LABEL_MAX_JINT, trunc.k_pot)?;
    let labeled = eig.vectors.columns(0, TWO_MODE_LEVELS.min(eig.values.len())).into_owned();
    let mut labels = label_states(&labeled, &refs);
    labels.resize(eig.values.len(), None);
    Ok(TwoModeSolution { flux, basis, energies: e, values: eig.values, vectors: eig.vectors, labels })
}

pub fn solve_labeled_two_mode(params: &DeviceParams, flux: FluxBias, trunc: &Truncation) -> Result<TwoModeSolution> {
    solve_labeled_two_mode_levels(params, flux, trunc, TWO_MODE_LEVELS)
}

fn two_mode_spectrum(params: &DeviceParams, flux: FluxBias, trunc: &Truncation) -> Result<SpectrumResult> {
    let sol = solve_labeled_two_mode(params, flux, trunc)?;
    let mut out = SpectrumResult::from_levels(flux, ModelKind::TwoMode, &sol.values);
    for k in 1..=4 {
        out.transitions[k - 1] = sol.transition(k, 0);
    }
    out.f_int = sol.transition(0, 1);
    out.anharmonicity = match (out.transitions[0], out.transitions[1]) {
        (Some(f1), Some(f2)) => Some(f2 - 2.0 * f1),
        _ => None,
    };
    out.labels = sol.labels;
    Ok(out)
}

/// Dressed targets: (i_q, j_int, resonator photons).
const DRESSED_TARGETS: [(usize, usize, usize); 7] =
    [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0), (4, 0, 0), (0, 1, 0), (0, 0, 1)];

fn resonator_spectrum(params: &DeviceParams, flux: FluxBias, trunc: &Truncation) -> Result<SpectrumResult> {
    let fock = trunc.fock_basis()?;
    let keep = trunc.dressed_levels.max(TWO_MODE_LEVELS);
    let sol = solve_labeled_two_mode_levels(params, flux, trunc, keep)?;
    let e_l = two_mode::resonator_el(params, &sol.energies)?;
    let nf = fock.dim();

    // Reference vectors in the diagonalized space for each target.
    let (values, vectors, refs): (Vec<f64>, DMatrix<f64>, Vec<Option<Vec<(usize, f64)>>>) = if trunc.full_product {
        let ej2 = params.squid(flux).ej2;
        let h = full_product_matrix(&sol.energies, params.ej1, ej2, e_l, sol.basis, fock)?;
        let eig = eigensolve_real(&h, 8 * DRESSED_TARGETS.len())?;
        let refs = DRESSED_TARGETS
            .iter()
            .map(|&(i, j, r)| {
                sol.find(i, j).map(|a| {
                    let u = sol.vectors.column(a);
                    u.iter().enumerate().map(|(q, &c)| (q * nf + r, c)).collect()
                })
            })
            .collect();
        (eig.values, eig.vectors, refs)
    } else {
        let qubit = crate::hilbert::RealEigen {
            values: sol.values[..keep].to_vec(),
            vectors: sol.vectors.columns(0, keep).into_owned(),
        };
        let h = dressed_matrix(&qubit, sol.basis, &sol.energies, e_l, fock);
        let eig = eigensolve_real(&h, h.nrows())?;
        let refs = DRESSED_TARGETS
            .iter()
            .map(|&(i, j, r)| sol.find(i, j).map(|a| vec![(a * nf + r, 1.0)]))
            .collect();
        (eig.values, eig.vectors, refs)
    };

    let overlaps = DMatrix::from_fn(vectors.ncols(), DRESSED_TARGETS.len(), |s, t| match &refs[t] {
        Some(r) => r.iter().map(|&(idx, c)| c * vectors[(idx, s)]).sum::<f64>().powi(2),
        None => 0.0,
    });
    let assigned = assign_by_overlap(&overlaps);
    let mut level_of = [None; DRESSED_TARGETS.len()];
    for (s, a) in assigned.iter().enumerate() {
        if let Some((t, ov)) = a {
            if *ov > 0.0 {
                level_of[*t] = Some(s);
            }
        }
    }
    let e = |t: usize| level_of[t].map(|s| values[s]);
    let mut out = SpectrumResult::from_levels(flux, ModelKind::TwoModeWithResonator, &values[..values.len().min(TWO_MODE_LEVELS)]);
    let g = e(0).ok_or_else(|| Error::Numeric("dressed ground state not identified".into()))?;
    for k in 1..=4 {
        out.transitions[k - 1] = e(k).map(|x| x - g);
    }
    out.f_int = e(5).map(|x| x - g);
    out.f_res = e(6).map(|x| x - g);
    out.anharmonicity = match (out.transitions[0], out.transitions[1]) {
        (Some(f1), Some(f2)) => Some(f2 - 2.0 * f1),
        _ => None,
    };
    out.labels = sol.labels[..TWO_MODE_LEVELS].to_vec();
    Ok(out)
}

/// Levels of a single-mode model.
const ONE_D_LEVELS: usize = 8;

/// Spectrum of one flux-dependent model at one flux point.
pub fn spectrum(kind: ModelKind, params: &DeviceParams, flux: FluxBias, trunc: &Truncation) -> Result<SpectrumResult> {
    params.validate()?;
    match kind {
        ModelKind::TwoMode => two_mode_spectrum(params, flux, trunc),
        ModelKind::TwoModeWithResonator => resonator_spectrum(params, flux, trunc),
        ModelKind::BornOppenheimer | ModelKind::Reduced => {
            let which = if kind == ModelKind::Reduced { OneDKind::Reduced } else { OneDKind::BornOppenheimer };
            let sol = one_d::solve_flux_one_d(which, params, flux, trunc.charge_basis()?, trunc.k_pot, ONE_D_LEVELS)?;
            Ok(SpectrumResult::from_levels(flux, kind, &sol.eig.values))
        }
        ModelKind::HarmonicTransmon => Err(Error::Config(
            "the harmonic transmon takes a HarmonicSpec, not device parameters; use harmonic_spectrum".into(),
        )),
    }
}

/// Spectrum of 4E_C n² − Σ U_k cos kφ.
pub fn harmonic_spectrum(spec: &HarmonicSpec, basis: ChargeBasis) -> Result<SpectrumResult> {
    let h = one_d::harmonic_matrix(spec, basis)?;
    let eig = eigensolve_real(&h, ONE_D_LEVELS)?;
    Ok(SpectrumResult::from_levels(FluxBias::from_radians(0.0), ModelKind::HarmonicTransmon, &eig.values))
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn flux_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Config("flux grid needs count >= 1".into()));
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err(Error::Config("flux grid bounds must be finite".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { stop } else { start + step * i as f64 }).collect())
}

/// Spectra over a flux grid given in Φ₀; evaluated in parallel.
pub fn sweep(kind: ModelKind, params: &DeviceParams, fluxes_phi0: &[f64], trunc: &Truncation) -> Vec<Result<SpectrumResult>> {
    crate::par_map(fluxes_phi0, |&f| spectrum(kind, params, FluxBias::from_phi0(f), trunc))
}

pub const SWEEP_CSV_HEADER: [&str; 8] =
    ["phi_e_phi0", "f01_GHz", "f02h_GHz", "f03t_GHz", "f04q_GHz", "fint_GHz", "alpha_GHz", "model"];

/// Writes sweep rows; missing transitions are left empty.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SpectrumResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            sig9(r.flux.phi0()),
            opt_sig9(r.f0k_over_k(1)),
            opt_sig9(r.f0k_over_k(2)),
            opt_sig9(r.f0k_over_k(3)),
            opt_sig9(r.f0k_over_k(4)),
            opt_sig9(r.f_int),
            opt_sig9(r.anharmonicity),
            r.model.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
