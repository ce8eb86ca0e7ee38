//! Photon generation from vacuum in cavities with time-modulated Kerr and
//! higher-order nonlinearities.
//!
//! The crate covers the driven Dicke-Kerr model and a cavity whose frequency
//! and nonlinearity are modulated together: operator construction
//! ([`hilbert`], [`models`]), dressed spectra and transition rates
//! ([`spectra`]), closed-form weak-coupling results ([`perturbation`]), time
//! evolution ([`dynamics`]), photon statistics ([`observables`]) and a
//! configurable experiment runner ([`scenarios`]).

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod observables;
pub mod perturbation;
pub mod scenarios;
pub mod spectra;
mod special;

pub use error::{Error, Result};
pub use special::{bessel_j, bessel_ratio};
