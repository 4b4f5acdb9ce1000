//! Contour dynamics for 2D active scalar patches under a radial Fourier
//! multiplier m(Λ).
//!
//! The velocity is recovered from the scalar through a Biot-Savart law whose
//! kernel is determined by the multiplier symbol m(r). The crate provides:
//!
//! * the symbol families (Euler, α-SQG, loglog-Euler, ...) with exact
//!   derivatives and numerical hypothesis checkers ([`multiplier`]),
//! * Hankel-transform evaluation of the radial kernel G(ρ), its derivatives
//!   and the stream kernel R̃(ρ) ([`kernel`]),
//! * the Osgood profile functions H, H̃, 𝓜, 𝓗 with inverses and the flow-map
//!   / patch-separation envelopes built from them ([`osgood`]),
//! * boundary-integral velocity and symmetric-gradient evaluation with a
//!   brute-force area-quadrature oracle ([`biot_savart`]),
//! * RK4 time stepping of multi-patch boundaries with arc-length
//!   reparameterization ([`contour`]),
//! * boundary-regularity diagnostics: Hölder seminorms of ξ-derivatives,
//!   Δ_γ, the geometric defect, envelope checks ([`diagnostics`]),
//! * run configuration and artifact output ([`config`], [`output`]).

pub mod biot_savart;
pub mod config;
pub mod contour;
pub mod diagnostics;
mod error;
pub mod geometry;
pub mod interp;
pub mod kernel;
pub mod multiplier;
pub mod osgood;
pub mod output;
pub mod quad;
pub mod special;
pub mod spectral;
mod taylor;

pub use error::{Error, Result};
pub use geometry::Vec2;
