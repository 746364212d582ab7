//! Incompressible surface Stokes and Navier–Stokes flow on closed tori.
//!
//! Fields live on a single periodic chart `(θ, φ) ∈ [0, 2π)²` with a
//! Riemannian metric `g`. Derivatives are Fourier pseudospectral; integrals
//! use the trapezoidal rule, which is spectrally accurate on periodic grids.

pub mod error;
pub mod field;
pub mod fieldcalc;
pub mod geometry;
pub mod helmholtz;
pub mod random;
pub mod spectral;
pub mod stokes;
pub mod korn;
pub mod dynamics;
pub mod harness;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, Variance, VectorField};
pub use geometry::{build_flat_torus, build_torus_of_revolution, SurfaceChart, SurfaceKind};
