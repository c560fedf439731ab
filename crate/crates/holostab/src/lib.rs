//! File formats, dataset ingestion and benchmark drivers around
//! [`holostab_core`].
//!
//! The core crate is `no_std` and does all the mathematics; this crate adds
//! everything that touches the filesystem or the clock: the complex JSON
//! format, trajectory/result emission, TNTP transportation-network parsing
//! and zone lifting, the scaling benchmark runner, and the `holostab` binary.

pub mod benchrun;
pub mod fileio;
pub mod report;
pub mod tntp;
pub mod zones;

pub use holostab_core as core;
