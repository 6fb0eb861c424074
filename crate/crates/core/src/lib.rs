//! Shifted Darboux transforms of Jacobi matrices.
//!
//! A Jacobi matrix `J` of a positive measure `mu` is factorized at a real
//! shift as `J - xI = L G L^T` with `G` a diagonal signature. Reversing the
//! factors gives `J~ = G L^T L + xI`, a `G`-symmetric tridiagonal matrix
//! attached to the signed measure `(t - x) dmu`. The crate builds these
//! objects, computes their (possibly complex) spectra, the diagonal Pade
//! approximants whose poles they are, and finite-section diagnostics for
//! boundedness of the pivots.

pub mod cli;
pub mod darboux;
pub mod dd;
pub mod diagnostics;
pub mod error;
pub mod jacobi;
pub mod measures;
pub mod pade;
pub mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use darboux::{
    build_l, chain_transform, christoffel_eval, darboux_transform, darboux_truncation, factorize,
    factorize_extended, factorize_with, inverse_transform, BidiagonalL, GSymmetricTridiagonal,
    ShiftedFactorization, Signature, Tridiagonal,
};
pub use error::{Error, Result};
pub use jacobi::{gauss_quadrature, sym_eigs, truncate, GaussRule, JacobiTruncation};
pub use measures::{chebyshev_measure, custom_measure, MeasureSpec, SignedMeasureSpec, Tail};
pub use spectral::{ab_ba_check, pole_sweep, tridiag_eigs, SpectrumReport};

/// Arithmetic used by the pivot sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Standard,
    /// Double-double, about 106 bits.
    Extended,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(Precision::Standard),
            "extended" => Ok(Precision::Extended),
            other => Err(Error::InvalidArgument(format!(
                "unknown precision `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Standard => "standard",
            Precision::Extended => "extended",
        })
    }
}
