//! Stamps each resolved record with the owner's serving cell at its
//! timestamp and draws data-session volumes, producing schema-complete
//! records ready for the operator split.

use crate::{CombineError, CombineLog, ResolvedEvent, ResolvedKind};
use cdrkit_core::io::{CellReader, IoError};
use cdrkit_core::rng::RngFactory;
use cdrkit_core::types::{CdrRecord, RecordBody};
use cdrkit_social::PhoneIdentity;
use cdrkit_statmodel::{VolumeProfile, VolumeTable};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;
use std::path::Path;

/// Per-user (timestamp, cell) track from the cell-mapped mobility stream.
pub fn load_cells(path: &Path) -> Result<BTreeMap<u32, Vec<(u64, u32)>>, IoError> {
    let mut by_user: BTreeMap<u32, Vec<(u64, u32)>> = BTreeMap::new();
    for pt in CellReader::open(path)? {
        let pt = pt?;
        by_user.entry(pt.user_id).or_default().push((pt.timestamp, pt.cell_id));
    }
    for track in by_user.values_mut() {
        track.sort_unstable();
    }
    Ok(by_user)
}

/// Cell of the latest sample at or before `t`; events that predate the first
/// sample borrow its cell and are counted.
fn cell_at(track: &[(u64, u32)], t: u64, log: &mut CombineLog) -> u32 {
    match track.partition_point(|&(ts, _)| ts <= t) {
        0 => {
            log.events_before_first_cell += 1;
            track[0].1
        }
        k => track[k - 1].1,
    }
}

pub fn attach_space_and_metrics(
    events: &[ResolvedEvent],
    cells: &BTreeMap<u32, Vec<(u64, u32)>>,
    identities: &[PhoneIdentity],
    volumes: &VolumeTable,
    factory: &RngFactory,
    log: &mut CombineLog,
) -> Result<Vec<CdrRecord>, CombineError> {
    // One volume stream per user: the profile is the first draw, then each
    // data session consumes from the same stream in record order.
    let mut vol_state: BTreeMap<u32, (VolumeProfile, ChaCha12Rng)> = BTreeMap::new();
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let track = cells
            .get(&ev.user_id)
            .filter(|t| !t.is_empty())
            .ok_or(CombineError::MissingCells { user_id: ev.user_id })?;
        let cell_id = cell_at(track, ev.timestamp, log);
        let id = &identities[ev.user_id as usize];
        let body = match &ev.kind {
            ResolvedKind::Call { call_type, duration_s, correspondent } => RecordBody::Call {
                call_type: *call_type,
                duration_s: *duration_s,
                correspondent: correspondent.clone(),
            },
            ResolvedKind::Sms { sms_type, correspondent } => RecordBody::Sms {
                sms_type: *sms_type,
                correspondent: correspondent.clone(),
            },
            ResolvedKind::Data => {
                let (profile, rng) = vol_state.entry(ev.user_id).or_insert_with(|| {
                    let mut r = factory.stream(&format!("combine/volume/{}", ev.user_id));
                    let profile = volumes.draw_profile(&mut r);
                    (profile, r)
                });
                RecordBody::Data { volume_bytes: volumes.sample(*profile, ev.timestamp, rng) }
            }
        };
        out.push(CdrRecord {
            phone: id.phone.clone(),
            imei: id.imei.clone(),
            cell_id,
            timestamp: ev.timestamp,
            body,
        });
    }
    Ok(out)
}
