//! Localization landscape toolkit for periodic Schrödinger operators
//! `H = -Δ + V` with piecewise-constant random potentials.
//!
//! A single linear solve `H u = 1` yields the landscape `u` and the effective
//! potential `W = 1/u`. The wells of `W` predict where low eigenfunctions
//! localize, their approximate supports, their eigenvalues
//! (`λ ≈ (1 + n/4) W_min`) and the counting function (effective Weyl law).
//! [`spectra`] provides an eigensolver used to check those predictions.

pub mod error;
pub mod fft;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod landscape;
pub mod operator;
pub mod potential;
pub mod predict;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use field::{argmax_field, argmin_field, integrate, FieldView, ScalarField};
pub use grid::{Grid, Lattice, Stencil};
pub use landscape::{compute_landscape, LandscapePair};
pub use operator::{solve_spd, SchrodingerOperator, SolveReport, SpdOperator};
pub use potential::Potential;
pub use spectra::{smallest_eigenpairs, EigenPair};
