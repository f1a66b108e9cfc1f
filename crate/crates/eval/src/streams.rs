//! Step streams scored by every predictor. Built straight from user
//! sequences, uncapped, so models and baselines see the exact same steps:
//! transitions between consecutive self-generated events, and interactions
//! with a known correspondent for the rank family.

use cdrkit_core::types::{iet_bin, EventType};
use cdrkit_refdata::{friendship_ranks, is_generated, UserSeq};
use std::collections::BTreeMap;

/// Transition: the event that happened and the one that followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventStep {
    pub prev: EventType,
    pub prev_t: u64,
    pub next: EventType,
}

/// Same transition, carrying the gap to predict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStep {
    pub prev_t: u64,
    pub next: EventType,
    pub bin: usize,
    pub gap_s: f64,
}

/// One interaction with a known correspondent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrStep {
    pub event: EventType,
    pub t: u64,
    pub rank: u32,
}

pub struct UserEventSteps {
    pub user_id: u32,
    pub steps: Vec<EventStep>,
}

pub struct UserGapSteps {
    pub user_id: u32,
    pub steps: Vec<GapStep>,
}

pub struct UserCorrSteps {
    pub user_id: u32,
    pub n_corr: usize,
    pub steps: Vec<CorrStep>,
}

/// Per-step class probabilities against true class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStream {
    pub user_id: u32,
    pub probs: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
}

/// Per-step scalar predictions against scalar truth; `bins` carries the true
/// gap bin when the value family has one (empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueStream {
    pub user_id: u32,
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
    pub bins: Vec<usize>,
}

pub fn event_steps(users: &[UserSeq]) -> Vec<UserEventSteps> {
    users
        .iter()
        .filter_map(|user| {
            let evs: Vec<_> = user.events.iter().filter(|e| is_generated(e)).collect();
            if evs.len() < 2 {
                return None;
            }
            let steps = evs
                .windows(2)
                .map(|w| EventStep {
                    prev: w[0].event_type,
                    prev_t: w[0].timestamp,
                    next: w[1].event_type,
                })
                .collect();
            Some(UserEventSteps { user_id: user.user_id, steps })
        })
        .collect()
}

pub fn gap_steps(users: &[UserSeq]) -> Vec<UserGapSteps> {
    users
        .iter()
        .filter_map(|user| {
            let evs: Vec<_> = user.events.iter().filter(|e| is_generated(e)).collect();
            if evs.len() < 2 {
                return None;
            }
            let steps = evs
                .windows(2)
                .map(|w| {
                    let gap = (w[1].timestamp - w[0].timestamp) as f64;
                    GapStep {
                        prev_t: w[0].timestamp,
                        next: w[1].event_type,
                        bin: iet_bin(gap),
                        gap_s: gap,
                    }
                })
                .collect();
            Some(UserGapSteps { user_id: user.user_id, steps })
        })
        .collect()
}

/// Ranks come from `rank_source`, normally the user's full trace, so a
/// chronological split still ranks against everything the user ever did.
pub fn corr_steps(users: &[UserSeq], rank_source: &[UserSeq]) -> Vec<UserCorrSteps> {
    let full: BTreeMap<u32, &UserSeq> = rank_source.iter().map(|u| (u.user_id, u)).collect();
    users
        .iter()
        .filter_map(|user| {
            let source = full.get(&user.user_id)?;
            let ranks = friendship_ranks(&source.events);
            if ranks.is_empty() {
                return None;
            }
            let rank_of: BTreeMap<&str, usize> =
                ranks.iter().map(|(id, r)| (id.as_str(), *r)).collect();
            let steps: Vec<CorrStep> = user
                .events
                .iter()
                .filter(|e| is_generated(e) && e.event_type.is_interaction())
                .filter_map(|e| {
                    let corr = e.correspondent_id.as_deref()?;
                    let rank = *rank_of.get(corr)?;
                    Some(CorrStep { event: e.event_type, t: e.timestamp, rank: rank as u32 })
                })
                .collect();
            if steps.is_empty() {
                return None;
            }
            Some(UserCorrSteps { user_id: user.user_id, n_corr: ranks.len(), steps })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::types::Direction;
    use cdrkit_refdata::RefEvent;

    fn ev(t: u64, ty: EventType, corr: Option<&str>, dir: Direction) -> RefEvent {
        RefEvent {
            timestamp: t,
            user_id: 0,
            event_type: ty,
            correspondent_id: corr.map(str::to_string),
            direction: dir,
            call_duration_s: None,
        }
    }

    #[test]
    fn incoming_local_events_are_not_steps() {
        let users = vec![UserSeq {
            user_id: 0,
            events: vec![
                ev(100, EventType::Data, None, Direction::Outgoing),
                ev(200, EventType::LocalCall, Some("x"), Direction::Incoming),
                ev(5000, EventType::Data, None, Direction::Outgoing),
            ],
        }];
        let steps = event_steps(&users);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].steps.len(), 1, "the incoming call is induced, not generated");
        assert_eq!(steps[0].steps[0].next, EventType::Data);
        let gaps = gap_steps(&users);
        assert_eq!(gaps[0].steps[0].gap_s, 4900.0);
        assert_eq!(gaps[0].steps[0].bin, 1);
    }

    #[test]
    fn corr_steps_rank_against_the_full_trace() {
        let events = vec![
            ev(10, EventType::LocalCall, Some("a"), Direction::Outgoing),
            ev(20, EventType::LocalCall, Some("b"), Direction::Outgoing),
            ev(30, EventType::LocalCall, Some("b"), Direction::Outgoing),
        ];
        let users = vec![UserSeq { user_id: 0, events }];
        let steps = corr_steps(&users, &users);
        assert_eq!(steps[0].n_corr, 2);
        // b is contacted twice, so it takes the top rank (2).
        assert_eq!(steps[0].steps.iter().map(|s| s.rank).collect::<Vec<_>>(), vec![1, 2, 2]);
    }
}
