//! Semiclassical and exact simulation of spin squeezing in nearest-neighbor
//! XXZ magnets built from two-component Mott insulators, including mobile
//! holes and spin-density coupling, plus the measurement chain used to turn
//! raw shots (or camera frames) into a squeezing parameter.
//!
//! Crate layout:
//!
//! * [`couplings`] maps Bose-Hubbard energies to XXZ couplings.
//! * [`lattice`] builds open (or periodic) chains and cubes.
//! * [`dtwa`] is the discrete truncated Wigner engine with hole processes.
//! * [`ed`] evolves small chains exactly and serves as the oracle.
//! * [`analysis`] reduces moments and shots to squeezing curves.
//! * [`imaging`] is a forward model of polarization-contrast imaging with
//!   PCA fringe removal and quadrant analysis.
//! * [`config`], [`output`] and [`runner`] back the command line tool.

pub mod analysis;
pub mod config;
pub mod couplings;
pub mod dtwa;
pub mod ed;
pub mod error;
pub mod imaging;
pub mod lattice;
pub mod output;
pub mod rng;
pub mod runner;
pub mod vec3;

pub use error::{Error, Result};
