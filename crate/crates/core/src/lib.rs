//! Numerical toolkit for photon exchange between two atoms held at
//! space-like separation.
//!
//! Natural units are used throughout (`ħ = c = 1`). The crate is organised
//! by physical layer:
//!
//! * [`propagator`]: the massless Feynman propagator, its far-zone limit and a
//!   regulated mode-sum oracle, plus Lorentz boosts and grid export.
//! * [`amplitude`]: second-order transfer amplitude `b`, in closed form and by
//!   double-time quadrature.
//! * [`state`]: joint atom/field states, vacuum projection, Schmidt values,
//!   partial traces and concurrence.
//! * [`protocols`]: post-selection, entanglement concentration, ensembles,
//!   mutual information and the XOR time capsule.
//! * [`lattice`]: exact evolution of two atoms on a truncated 1-D mode ring.
//! * [`multipole`]: Taylor expansion of the propagator about the atom centres.
//!
//! [`quadrature`] and [`fit`] hold the shared numerical kernels.

pub mod amplitude;
pub mod error;
pub mod fit;
pub mod lattice;
mod linalg;
pub mod multipole;
pub mod propagator;
pub mod protocols;
pub mod quadrature;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
