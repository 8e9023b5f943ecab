//! Low-lying complex spectra of the planar magnetic Schrödinger operator
//! `(-ih∇ - A)² + hV` with a possibly complex electric potential `V`, in the
//! semiclassical limit `h → 0`.
//!
//! Three independent routes to the same eigenvalues are provided and
//! cross-validated:
//!
//! 1. [`direct2d`] — gauge-covariant 5-point (Peierls link) discretization of
//!    the full 2D operator, solved by shift-invert Arnoldi around `μ₀h`.
//! 2. [`effective`] — the effective 1D pseudodifferential operator with symbol
//!    `B̂ + V̂ + hμ₁` obtained from the fiber-wise harmonic-oscillator
//!    reduction ([`hermite`]), discretized by a midpoint Weyl rule.
//! 3. [`quadratic`] — the complex quadratic model at the bottom of the well,
//!    with closed-form spectrum `{(2n-1)c₀h}`.
//!
//! The [`fields`] / [`chart`] modules carry the electromagnetic data: the
//! field model `(B, V)`, the localizer `F = u(B+Re V) + v Im V`, the gauge
//! `A = (0, ∫₀^{q₁} B)`, and the phase-space diffeomorphism it induces.
//! [`sweep`] orchestrates h-sweeps, spectra matching, and asymptotic fits.

pub mod chart;
pub mod config;
pub mod direct2d;
pub mod effective;
pub mod eigensolve;
pub mod error;
pub mod expr;
pub mod fields;
pub mod hermite;
pub mod numeric;
pub mod quadratic;
pub mod registry;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};

/// Complex scalar used throughout (`faer::c64` is `num_complex::Complex<f64>`).
pub type C64 = num_complex::Complex<f64>;

/// Shorthand for the imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
