//! Single-threaded sweep over the merged time-ordered event queue. Turns
//! planned events into concrete records: maps friendship ranks onto
//! correspondents, enforces one ongoing call per user, bounds durations, and
//! mirrors local traffic at the other end.

use crate::{CombineError, CombineLog, PlannedEvent};
use cdrkit_core::config::{CombineConfig, DurationBound};
use cdrkit_core::rng::RngFactory;
use cdrkit_core::types::{CallType, EventType, SmsType};
use cdrkit_social::{Category, PhoneIdentity, PhonebookEntry};
use cdrkit_statmodel::sample_call_duration;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedEvent {
    pub user_id: u32,
    pub timestamp: u64,
    pub kind: ResolvedKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolvedKind {
    Call { call_type: CallType, duration_s: u32, correspondent: String },
    Sms { sms_type: SmsType, correspondent: String },
    Data,
}

/// Entries the owner can direct an event at, smallest rank first. Local
/// traffic goes to correspondents the owner actually contacts; international
/// traffic goes to `inter` numbers.
fn eligible(book: &[PhonebookEntry], intl: bool) -> Vec<&PhonebookEntry> {
    let mut list: Vec<&PhonebookEntry> = book
        .iter()
        .filter(|e| {
            if intl {
                e.category == Category::Inter
            } else {
                matches!(e.category, Category::Both | Category::Out) && e.peer.is_some()
            }
        })
        .collect();
    list.sort_by_key(|e| e.rank);
    list
}

/// Entry whose rank is closest to the predicted one; ties go to the lower
/// rank. The prediction ranges over the whole phonebook, so it can land on a
/// rank the event class cannot use.
fn nearest<'a>(list: &[&'a PhonebookEntry], rank: u32) -> Option<&'a PhonebookEntry> {
    list.iter()
        .min_by_key(|e| (e.rank.abs_diff(rank), e.rank))
        .copied()
}

/// Closest entry strictly below `rank`, for the single re-target attempt.
fn next_lower<'a>(list: &[&'a PhonebookEntry], rank: u32) -> Option<&'a PhonebookEntry> {
    list.iter().rev().find(|e| e.rank < rank).copied()
}

struct DurationBounds {
    next_owner: u64,
    next_callee: Option<u64>,
    horizon: u64,
}

/// Sampled call duration, truncated so the call ends by the owner's next
/// planned event (optionally the callee's too) and by the trace horizon.
fn bounded_duration<R: Rng>(t: u64, b: &DurationBounds, mode: DurationBound, rng: &mut R) -> u32 {
    let sampled = sample_call_duration(rng).round().max(1.0) as u64;
    let mut cap = (b.next_owner - t).min(b.horizon - t);
    if mode == DurationBound::MinCallerCallee {
        if let Some(nc) = b.next_callee {
            cap = cap.min(nc - t);
        }
    }
    sampled.min(cap).max(1) as u32
}

/// First planned event of `user` strictly after `t`, or the horizon.
fn next_planned_after(stream: &[PlannedEvent], t: u64, horizon: u64) -> u64 {
    let k = stream.partition_point(|e| e.timestamp <= t);
    stream.get(k).map_or(horizon, |e| e.timestamp)
}

pub fn resolve_calls(
    streams: &[Vec<PlannedEvent>],
    books: &[Vec<PhonebookEntry>],
    identities: &[PhoneIdentity],
    cfg: &CombineConfig,
    duration_s: u64,
    factory: &RngFactory,
    log: &mut CombineLog,
) -> Result<Vec<ResolvedEvent>, CombineError> {
    let n = identities.len();
    if streams.len() != n || books.len() != n {
        return Err(CombineError::SizeMismatch {
            streams: streams.len(),
            books: books.len(),
            identities: n,
        });
    }
    let locals: Vec<Vec<&PhonebookEntry>> = books.iter().map(|b| eligible(b, false)).collect();
    let inters: Vec<Vec<&PhonebookEntry>> = books.iter().map(|b| eligible(b, true)).collect();

    let mut queue: Vec<(u64, u32, usize)> = Vec::new();
    for (uid, stream) in streams.iter().enumerate() {
        for (i, ev) in stream.iter().enumerate() {
            queue.push((ev.timestamp, uid as u32, i));
        }
    }
    queue.sort_unstable();
    log.planned_events += queue.len() as u64;

    let mut rng = factory.stream("combine/resolve");
    let mut busy_until = vec![0u64; n];
    let mut out: Vec<ResolvedEvent> = Vec::with_capacity(queue.len());

    for &(t, uid, i) in &queue {
        let u = uid as usize;
        let ev = &streams[u][i];
        match ev.event {
            EventType::Data => {
                out.push(ResolvedEvent { user_id: uid, timestamp: t, kind: ResolvedKind::Data });
                log.data_sessions += 1;
            }
            EventType::LocalSms => {
                let Some(target) = nearest(&locals[u], ev.rank.unwrap_or(1)) else {
                    log.dropped_no_correspondent += 1;
                    continue;
                };
                let v = target.peer.unwrap();
                out.push(ResolvedEvent {
                    user_id: uid,
                    timestamp: t,
                    kind: ResolvedKind::Sms {
                        sms_type: SmsType::Mo,
                        correspondent: target.correspondent.clone(),
                    },
                });
                out.push(ResolvedEvent {
                    user_id: v,
                    timestamp: t,
                    kind: ResolvedKind::Sms {
                        sms_type: SmsType::Mt,
                        correspondent: identities[u].phone.clone(),
                    },
                });
                log.sms_messages += 1;
            }
            EventType::LocalCall => {
                if busy_until[u] > t {
                    log.dropped_busy_owner += 1;
                    continue;
                }
                let Some(mut target) = nearest(&locals[u], ev.rank.unwrap_or(1)) else {
                    log.dropped_no_correspondent += 1;
                    continue;
                };
                if busy_until[target.peer.unwrap() as usize] > t {
                    match next_lower(&locals[u], target.rank) {
                        Some(alt) if busy_until[alt.peer.unwrap() as usize] <= t => {
                            target = alt;
                            log.retargeted_calls += 1;
                        }
                        _ => {
                            log.dropped_busy_callee += 1;
                            continue;
                        }
                    }
                }
                let v = target.peer.unwrap() as usize;
                let bounds = DurationBounds {
                    next_owner: next_planned_after(&streams[u], t, duration_s),
                    next_callee: Some(next_planned_after(&streams[v], t, duration_s)),
                    horizon: duration_s,
                };
                let d = bounded_duration(t, &bounds, cfg.duration_bound, &mut rng);
                busy_until[u] = t + d as u64;
                busy_until[v] = t + d as u64;
                out.push(ResolvedEvent {
                    user_id: uid,
                    timestamp: t,
                    kind: ResolvedKind::Call {
                        call_type: CallType::Mo,
                        duration_s: d,
                        correspondent: target.correspondent.clone(),
                    },
                });
                out.push(ResolvedEvent {
                    user_id: v as u32,
                    timestamp: t,
                    kind: ResolvedKind::Call {
                        call_type: CallType::Mt,
                        duration_s: d,
                        correspondent: identities[u].phone.clone(),
                    },
                });
                log.placed_local_calls += 1;
            }
            EventType::IntlCall => {
                if busy_until[u] > t {
                    log.dropped_busy_owner += 1;
                    continue;
                }
                let Some(target) = nearest(&inters[u], ev.rank.unwrap_or(1)) else {
                    log.dropped_no_correspondent += 1;
                    continue;
                };
                let incoming = rng.gen_bool(cfg.intl_incoming_share);
                let bounds = DurationBounds {
                    next_owner: next_planned_after(&streams[u], t, duration_s),
                    next_callee: None,
                    horizon: duration_s,
                };
                let d = bounded_duration(t, &bounds, cfg.duration_bound, &mut rng);
                busy_until[u] = t + d as u64;
                let call_type = if incoming { CallType::Imt } else { CallType::Imo };
                out.push(ResolvedEvent {
                    user_id: uid,
                    timestamp: t,
                    kind: ResolvedKind::Call {
                        call_type,
                        duration_s: d,
                        correspondent: target.correspondent.clone(),
                    },
                });
                if incoming {
                    log.placed_intl_in += 1;
                } else {
                    log.placed_intl_out += 1;
                }
            }
        }
    }

    out.sort_by_key(|r| (r.timestamp, r.user_id));
    Ok(out)
}
