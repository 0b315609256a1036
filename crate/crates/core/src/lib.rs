//! Spectral solution of the time-nonlocal fractional Rayleigh-Stokes problem
//!
//! ```text
//! ∂_t u + (1 + γ ∂_t^α) A u = f,    u(t₀) = β u(0) + φ
//! ```
//!
//! for a positive self-adjoint operator `A` given by its discrete spectrum.
//! Each eigenmode reduces to a scalar problem whose propagator is the
//! relaxation kernel `B(λ, t)` (see [`kernel`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod kernel;
pub mod nonlocal;
pub mod oracle;
pub mod quad;
pub mod spectrum;

pub use error::{Error, Result};
pub use kernel::{FracParams, KernelValue, QuadConfig, TailRule};
