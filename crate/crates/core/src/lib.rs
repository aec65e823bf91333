//! Birman–Schwinger spectral solver for leaky quantum wires.
//!
//! The operator `−Δ − αδ(x − Γ)` in the plane has an eigenvalue `−κ²` exactly
//! when the integral operator with kernel `(α/2π)·K₀(κ|Γ(s) − Γ(s′)|)` on the
//! curve has eigenvalue one. This crate discretizes that operator for periodic
//! curves (Floquet fibers), for locally deformed curves on a finite window, and
//! for the exponential kernel of one-dimensional well arrays.

pub mod bsop;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod oned;
pub mod scalar;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic types.
pub type CurveSpec = geometry::CurveSpec<f64>;
pub type Profile = geometry::Profile<f64>;
pub type Deformation = geometry::Deformation<f64>;
pub type BSMatrix = bsop::BSMatrix<f64>;
pub type SymMatrix = numerics::SymMatrix<f64>;
pub type WellArray1D = oned::WellArray1D<f64>;
pub type BandStructure = spectral::BandStructure<f64>;
pub type BoundStateResult = spectral::BoundStateResult<f64>;
