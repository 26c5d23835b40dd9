//! Periodic traveling-wave data for a class of Hamiltonian PDEs of
//! quasilinear KdV and Euler--Korteweg type: action integrals, their
//! gradients and Hessians, negative signatures, and the small-amplitude
//! and large-wavelength asymptotic frames used to validate them.
//!
//! The crate is organized around the profile reduction
//! `(1/2) kappa(v) v_x^2 + W(v; c, lambda) = mu`: [`model`] builds the
//! effective potential `W` and its parameter gradients, [`portrait`]
//! locates the saddle/center skeleton and orbit roots, [`quadrature`]
//! evaluates the desingularized action integrals, and [`stability`],
//! [`asymptotics`], [`algebra`], [`asymlib`] and [`constant_states`]
//! implement the Morse-index stability criteria and their limit checks.

pub mod algebra;
pub mod asymlib;
pub mod asymptotics;
pub mod constant_states;
mod error;
pub(crate) mod gl;
pub mod model;
pub mod portrait;
pub mod quadrature;
pub mod stability;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
