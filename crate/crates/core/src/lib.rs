//! Simulation and analysis toolkit for a flux-tunable transmon built from a
//! single Josephson junction in series with a SQUID, capacitively coupled to
//! a readout resonator.
//!
//! Energies are E/h in GHz, capacitances in fF, flux in units of Φ₀ unless a
//! name says otherwise.

// Negated comparisons reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod dispersive;
pub mod error;
pub mod estimator;
pub mod fmt;
pub mod hilbert;
pub mod lsq;
pub mod models;
pub mod specfit;

pub use error::{Error, Result};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
