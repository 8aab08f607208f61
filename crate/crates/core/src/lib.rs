//! Classical-wave simulation of CHSH correlation measurements on the
//! transverse-mode content of two independent fields in multimode slab
//! waveguides.
//!
//! The crate provides:
//! - an analytic TE mode solver for symmetric slabs ([`modes`]),
//! - a Crank-Nicolson finite-difference beam propagator with Kerr segments
//!   ([`bpm`]),
//! - a photonic circuit builder for the nonlinear gate and mode analyzers
//!   ([`circuit`]),
//! - exact two-mode operator algebra and a closed-form gate model
//!   ([`oracle`]),
//! - ensemble statistics over the random source phase difference
//!   ([`ensemble`]), and
//! - CHSH evaluation, maximization and sweeps ([`chsh`]).

pub mod bpm;
pub mod chsh;
pub mod circuit;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod grid;
pub mod layout;
pub mod modes;
pub mod numerics;
pub mod oracle;
pub mod plot;
pub mod report;

pub use error::{Error, Result};
