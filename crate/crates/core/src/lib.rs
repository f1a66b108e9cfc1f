//! Shared building blocks for the synthetic charging-data-record pipeline:
//! record and trajectory types, deterministic named RNG streams, the flat
//! key-value pipeline configuration, a local map projection, and the CSV
//! readers/writers every stage agrees on.
//!
//! Everything downstream (mobility, topology, social graph, sequence models,
//! combination, evaluation) depends on this crate and nothing here depends
//! back, so the file formats and the RNG discipline live in one place.

pub mod config;
pub mod geo;
pub mod io;
pub mod rng;
pub mod types;

pub use config::PipelineConfig;
pub use rng::RngFactory;
pub use types::{CdrRecord, CellPoint, EventType, RecordBody, TrajectoryPoint};
