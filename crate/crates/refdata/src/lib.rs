//! Reference-trace handling: the event CSV format, ingestion filters, the
//! empirical statistics every downstream stage consumes, a seeded generator
//! that synthesizes a reference trace with known planted structure, and
//! train/validation/test splitting.

mod bootstrap;
mod event;
mod ingest;
mod split;
mod stats;

pub use bootstrap::{bootstrap_ref, write_bootstrap};
pub use event::{read_ref_events, write_ref_events, RefEvent, RefEventReader, REF_HEADER};
pub use ingest::{ingest_events, ingest_ref, is_generated, UserSeq};
pub use split::{split, SplitError, SplitSpec, Splits};
pub use stats::{
    extract_stats, friendship_ranks, read_stats, write_stats, RefStats, StatsError,
};
