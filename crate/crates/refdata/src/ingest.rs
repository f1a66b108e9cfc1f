//! Ingestion filters: group rows per user, order them, and drop users whose
//! traces are unusable for sequence modeling.

use crate::event::{RefEvent, RefEventReader};
use cdrkit_core::io::IoError;
use cdrkit_core::types::{Direction, EventType};
use std::collections::BTreeMap;
use std::path::Path;

/// One user's chronological reference trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSeq {
    pub user_id: u32,
    pub events: Vec<RefEvent>,
}

/// True for events the user's own traffic process emits: data sessions,
/// outgoing local calls and SMS, and international calls in either
/// direction. Incoming local traffic is induced by other users and is kept
/// in the trace only for correspondent statistics.
pub fn is_generated(ev: &RefEvent) -> bool {
    match ev.event_type {
        EventType::Data | EventType::IntlCall => true,
        EventType::LocalCall | EventType::LocalSms => ev.direction == Direction::Outgoing,
    }
}

/// Streaming ingest of a reference CSV. See [`ingest_events`] for the
/// filtering rules.
pub fn ingest_ref(path: &Path) -> Result<Vec<UserSeq>, IoError> {
    let events = RefEventReader::open(path)?.collect::<Result<Vec<_>, _>>()?;
    Ok(ingest_events(events))
}

/// Group events per user and apply the cleanup filters: a user is dropped
/// entirely if any two of their events share a timestamp, or if fewer than
/// 3 of their events are self-generated. Surviving sequences are sorted
/// chronologically; users come out in ascending id order.
pub fn ingest_events(events: Vec<RefEvent>) -> Vec<UserSeq> {
    let mut per_user: BTreeMap<u32, Vec<RefEvent>> = BTreeMap::new();
    for ev in events {
        per_user.entry(ev.user_id).or_default().push(ev);
    }
    let mut out = Vec::with_capacity(per_user.len());
    'users: for (user_id, mut events) in per_user {
        events.sort_by_key(|e| e.timestamp);
        for pair in events.windows(2) {
            if pair[0].timestamp == pair[1].timestamp {
                continue 'users;
            }
        }
        if events.iter().filter(|e| is_generated(e)).count() < 3 {
            continue;
        }
        out.push(UserSeq { user_id, events });
    }
    out
}
