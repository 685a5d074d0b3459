//! Desk-scale simulator for a two-photon Franson interference experiment in
//! which the beam splitters are traveling acoustic waves inside acousto-optic
//! modulators. The crate models the relativistic time ordering of the two
//! measurement events, the beam-splitter optics, the quantum-mechanical and
//! Multisimultaneity correlation laws, an event-by-event Monte Carlo of full
//! fringe scans, and the fringe fitting needed to extract visibility.

pub mod analysis;
pub mod config;
pub mod models;
pub mod montecarlo;
pub mod optics;
pub mod relativity;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
