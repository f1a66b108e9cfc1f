//! Assembles full CdR traces: plan per-user event streams from the trained
//! sequence models, settle calls against one-call-per-user availability, pin
//! every record to the owner's serving cell, and split the result into one
//! trace per operator.

mod attach;
mod resolve;
mod sequence;
mod split;

pub use attach::{attach_space_and_metrics, load_cells};
pub use resolve::{resolve_calls, ResolvedEvent, ResolvedKind};
pub use sequence::{generate_sequences, GenModels, PlannedEvent};
pub use split::{split_by_operator, write_operator_files};

use cdrkit_core::io::IoError;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("stream/phonebook/identity tables disagree: {streams} streams, {books} phonebooks, {identities} identities")]
    SizeMismatch { streams: usize, books: usize, identities: usize },
    #[error("user {user_id} has no samples in the cell-mapped stream")]
    MissingCells { user_id: u32 },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Counters accumulated across the combine stages. Written next to the output
/// traces so dropped and re-targeted traffic stays visible.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CombineLog {
    pub planned_events: u64,
    pub placed_local_calls: u64,
    pub retargeted_calls: u64,
    pub dropped_busy_callee: u64,
    /// The record owner was already in a call at the planned time.
    pub dropped_busy_owner: u64,
    pub dropped_no_correspondent: u64,
    pub placed_intl_out: u64,
    pub placed_intl_in: u64,
    /// Local SMS pairs (one MO plus its MT mirror).
    pub sms_messages: u64,
    pub data_sessions: u64,
    /// Records stamped with the first cell sample because the event predates it.
    pub events_before_first_cell: u64,
}

impl CombineLog {
    pub fn render(&self) -> String {
        format!(
            "planned_events={}\nplaced_local_calls={}\nretargeted_calls={}\n\
             dropped_busy_callee={}\ndropped_busy_owner={}\ndropped_no_correspondent={}\n\
             placed_intl_out={}\nplaced_intl_in={}\nsms_messages={}\ndata_sessions={}\n\
             events_before_first_cell={}\n",
            self.planned_events,
            self.placed_local_calls,
            self.retargeted_calls,
            self.dropped_busy_callee,
            self.dropped_busy_owner,
            self.dropped_no_correspondent,
            self.placed_intl_out,
            self.placed_intl_in,
            self.sms_messages,
            self.data_sessions,
            self.events_before_first_cell,
        )
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let mut f = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
        f.write_all(self.render().as_bytes()).map_err(|e| IoError::io(path, e))
    }
}
