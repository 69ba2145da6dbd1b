//! Simulation of cross-phase modulation between a meter and a signal laser in
//! a rubidium-filled hollow-core fibre.
//!
//! The crate goes from the hyperfine-resolved two-photon lineshape
//! ([`atomic_model`]) to calibrated Kerr observables ([`kerr_engine`]),
//! through a shot-noise-limited heterodyne measurement ([`detection`]) and
//! curve fitting ([`fitting`]), up to the experiment pipelines in
//! [`harness`]. [`config`], [`io`] and [`cli`] hold the command-line front end.

pub mod atomic_model;
pub mod cli;
pub mod config;
pub mod detection;
pub mod error;
pub mod fitting;
pub mod harness;
pub mod io;
pub mod kerr_engine;
pub mod rng;

pub use error::{Error, Result};
