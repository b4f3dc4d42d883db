//! Numerical laboratory for the arrow of time.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs; IO, CLI handling and file formats live in the `tempus` crate.
//!
//! Module map:
//!
//! * [`trajectory`]: fixed-step RK4 integration, time reversal, trajectory residuals.
//! * [`systems`]: the four reference oscillators (harmonic, pendulum, modified, damped).
//! * [`symmetry`]: time-reversal invariance, reversibility and time-symmetry tests.
//! * [`cosmology`]: FRW + scalar field models, constraint handling, energy conditions.
//! * [`measure`]: Monte Carlo scans of the time-symmetric sets of the FRW phase space.
//! * [`decoherence`]: spectral mean values, weak-limit decay and pole-based times.
//! * [`quadrature`]: composite Gauss-Legendre grids.
//! * [`wigner`]: smoothed energy shells, their mixtures and classical transport.
//! * [`branch`]: branch-system energy-flux graphs and causal queries.
//! * [`urn`]: coupled Ehrenfest urns for the two-subsystem thermodynamic experiments.

#![no_std]
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod branch;
pub mod cosmology;
pub mod decoherence;
pub mod error;
pub mod measure;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod symmetry;
pub mod systems;
pub mod trajectory;
pub mod urn;
pub mod wigner;

pub use error::{Error, Result};
