//! Spectral analysis and boundary stabilization for a radial wave problem.
//!
//! The library studies the linearization of a cubic Klein–Gordon equation
//! around its unit ground state on a ball, reduced by radial symmetry to a
//! half-line wave equation for ψ = r·u with a dissipative boundary condition
//! ψ_t + aψ_r − (a/L)ψ = L·b(t). It provides:
//!
//! - resolvent pole location (complex strip search, purely imaginary modes,
//!   high-frequency asymptotics) in [`spectral`],
//! - the outgoing Green's kernel and elliptic resolvent solves in [`greens`],
//! - finite moment problems for real compactly supported boundary controls
//!   in [`moments`],
//! - explicit time-domain simulation with the dissipative boundary, plus
//!   open-loop and periodically refreshed closed-loop stabilization drivers
//!   in [`timedomain`],
//! - independent verification probes for kernel expansions and resolvent
//!   bounds in [`kernel_verify`].

pub mod error;
pub mod greens;
pub mod kernel_verify;
pub mod moments;
pub mod quad;
pub mod radial;
pub mod special;
pub mod spectral;
pub mod timedomain;

pub use error::{Error, Result};
pub use radial::{RadialGrid, RadialState, ScalingDirection, ScalingMap};
pub use spectral::{Frequency, Pole, PoleKind};
