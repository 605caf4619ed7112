//! Dynamic localization and quantum self-imaging in ac-driven
//! Glauber-Fock lattices.
//!
//! The crate pairs a unitary midpoint integrator for driven tight-binding
//! chains ([`propagate`]) with the closed-form displacement-operator
//! propagator of the Glauber-Fock chain ([`exact`]), and builds Floquet and
//! Wannier-Stark spectra ([`spectra`]) and trajectory observables
//! ([`observables`]) on top.

pub mod cli;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod propagate;
pub mod spectra;

pub use error::{Error, Result};
