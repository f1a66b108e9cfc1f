//! Per-user training sequences for the three models, plus batching.
//!
//! All three datasets walk each user's self-generated events in time order.
//! The event-type model sees (type, time) of one event and predicts the type
//! of the next; the gap model sees the time of one event plus the type of the
//! next and predicts the gap bin between them; the correspondent model sees
//! an interaction's own features and predicts the contact rank it involved.

use std::collections::BTreeMap;

use cdrkit_core::types::{iet_bin, EventType, Weekday};
use cdrkit_refdata::{friendship_ranks, is_generated, UserSeq};

use crate::features::{
    encode_corr_input, encode_event_input, encode_iet_input, CORR_INPUT_DIM, EVENT_INPUT_DIM,
    IET_INPUT_DIM,
};
use crate::lstm::{Batch, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    EventType,
    IetBin,
    Correspondent,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::EventType, ModelKind::IetBin, ModelKind::Correspondent];

    pub fn input_dim(self) -> usize {
        match self {
            ModelKind::EventType => EVENT_INPUT_DIM,
            ModelKind::IetBin => IET_INPUT_DIM,
            ModelKind::Correspondent => CORR_INPUT_DIM,
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            ModelKind::EventType => EventType::COUNT,
            ModelKind::IetBin => cdrkit_core::types::IET_BIN_COUNT,
            ModelKind::Correspondent => 1,
        }
    }

    pub fn loss(self) -> LossKind {
        match self {
            ModelKind::Correspondent => LossKind::Mae,
            _ => LossKind::Nll,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::EventType => "event",
            ModelKind::IetBin => "iet",
            ModelKind::Correspondent => "correspondent",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "event" => Some(ModelKind::EventType),
            "iet" => Some(ModelKind::IetBin),
            "correspondent" => Some(ModelKind::Correspondent),
            _ => None,
        }
    }
}

/// One user's sequence: `xs` is step-major, `len * input_dim` flat.
pub struct SeqExample {
    pub user_id: u32,
    pub xs: Vec<f64>,
    pub targets: Vec<f64>,
    pub len: usize,
}

pub struct SeqDataset {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub loss: LossKind,
    /// Truncation cap applied to every example, the `seq_quantile` of the raw
    /// per-user lengths.
    pub padded_len: usize,
    pub examples: Vec<SeqExample>,
}

impl SeqDataset {
    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }
}

fn generated_events(user: &UserSeq) -> Vec<&cdrkit_refdata::RefEvent> {
    user.events.iter().filter(|ev| is_generated(ev)).collect()
}

/// Nearest-rank quantile of the raw lengths, used as the truncation cap.
fn length_cap(mut lens: Vec<usize>, q: f64) -> usize {
    if lens.is_empty() {
        return 0;
    }
    lens.sort_unstable();
    let n = lens.len();
    let idx = ((n as f64 * q).ceil() as usize).clamp(1, n) - 1;
    lens[idx].max(1)
}

fn finish(kind: ModelKind, q: f64, mut examples: Vec<SeqExample>) -> SeqDataset {
    let cap = length_cap(examples.iter().map(|e| e.len).collect(), q);
    let input_dim = kind.input_dim();
    for ex in &mut examples {
        if ex.len > cap {
            ex.len = cap;
            ex.xs.truncate(cap * input_dim);
            ex.targets.truncate(cap);
        }
    }
    SeqDataset {
        kind,
        input_dim,
        output_dim: kind.output_dim(),
        loss: kind.loss(),
        padded_len: cap,
        examples,
    }
}

/// Transitions between consecutive self-generated events; users with fewer
/// than two such events contribute nothing.
pub fn event_dataset(users: &[UserSeq], seq_quantile: f64, start: Weekday) -> SeqDataset {
    let mut examples = Vec::new();
    for user in users {
        let evs = generated_events(user);
        if evs.len() < 2 {
            continue;
        }
        let len = evs.len() - 1;
        let mut xs = vec![0.0; len * EVENT_INPUT_DIM];
        let mut targets = Vec::with_capacity(len);
        for k in 0..len {
            encode_event_input(
                &mut xs[k * EVENT_INPUT_DIM..(k + 1) * EVENT_INPUT_DIM],
                evs[k].event_type,
                evs[k].timestamp,
                start,
            );
            targets.push(evs[k + 1].event_type.index() as f64);
        }
        examples.push(SeqExample { user_id: user.user_id, xs, targets, len });
    }
    finish(ModelKind::EventType, seq_quantile, examples)
}

/// Same transitions as [`event_dataset`], predicting the gap bin instead.
pub fn iet_dataset(users: &[UserSeq], seq_quantile: f64, start: Weekday) -> SeqDataset {
    let mut examples = Vec::new();
    for user in users {
        let evs = generated_events(user);
        if evs.len() < 2 {
            continue;
        }
        let len = evs.len() - 1;
        let mut xs = vec![0.0; len * IET_INPUT_DIM];
        let mut targets = Vec::with_capacity(len);
        for k in 0..len {
            encode_iet_input(
                &mut xs[k * IET_INPUT_DIM..(k + 1) * IET_INPUT_DIM],
                evs[k].timestamp,
                evs[k + 1].event_type,
                start,
            );
            let gap = (evs[k + 1].timestamp - evs[k].timestamp) as f64;
            targets.push(iet_bin(gap) as f64);
        }
        examples.push(SeqExample { user_id: user.user_id, xs, targets, len });
    }
    finish(ModelKind::IetBin, seq_quantile, examples)
}

/// Self-generated interactions with a known correspondent. Ranks and contact
/// counts come from `rank_source`, normally the user's full trace, so that a
/// chronological split still ranks against everything the user ever did.
pub fn corr_dataset(
    users: &[UserSeq],
    rank_source: &[UserSeq],
    seq_quantile: f64,
    start: Weekday,
) -> SeqDataset {
    let full: BTreeMap<u32, &UserSeq> = rank_source.iter().map(|u| (u.user_id, u)).collect();
    let mut examples = Vec::new();
    for user in users {
        let Some(source) = full.get(&user.user_id) else { continue };
        let ranks = friendship_ranks(&source.events);
        if ranks.is_empty() {
            continue;
        }
        let n_corr = ranks.len();
        let rank_of: BTreeMap<&str, usize> =
            ranks.iter().map(|(id, r)| (id.as_str(), *r)).collect();
        let mut xs = Vec::new();
        let mut targets = Vec::new();
        for ev in user.events.iter().filter(|ev| is_generated(ev)) {
            if !ev.event_type.is_interaction() {
                continue;
            }
            let Some(corr) = ev.correspondent_id.as_deref() else { continue };
            let Some(&rank) = rank_of.get(corr) else { continue };
            let at = xs.len();
            xs.resize(at + CORR_INPUT_DIM, 0.0);
            encode_corr_input(&mut xs[at..], ev.event_type, ev.timestamp, start, n_corr);
            targets.push(rank as f64);
        }
        if targets.is_empty() {
            continue;
        }
        let len = targets.len();
        examples.push(SeqExample { user_id: user.user_id, xs, targets, len });
    }
    finish(ModelKind::Correspondent, seq_quantile, examples)
}

/// Pack examples into the step-major block layout, padding (with zeros and a
/// short `lens` entry) up to the longest example in this batch.
pub fn make_batch(input_dim: usize, examples: &[&SeqExample]) -> Batch {
    let nb = examples.len();
    let steps = examples.iter().map(|e| e.len).max().unwrap_or(0);
    let mut xs = vec![vec![0.0; input_dim * nb]; steps];
    let mut targets = vec![vec![0.0; nb]; steps];
    let mut lens = Vec::with_capacity(nb);
    let mut n_valid = 0usize;
    for (j, ex) in examples.iter().enumerate() {
        lens.push(ex.len);
        n_valid += ex.len;
        for t in 0..ex.len {
            let row = &ex.xs[t * input_dim..(t + 1) * input_dim];
            let block = &mut xs[t];
            for (d, &v) in row.iter().enumerate() {
                block[d * nb + j] = v;
            }
            targets[t][j] = ex.targets[t];
        }
    }
    Batch { nb, steps, xs, targets, lens, n_valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::types::Direction;
    use cdrkit_refdata::RefEvent;

    fn ev(t: u64, ty: EventType, corr: Option<&str>, dir: Direction) -> RefEvent {
        RefEvent {
            timestamp: t,
            user_id: 1,
            event_type: ty,
            correspondent_id: corr.map(str::to_string),
            direction: dir,
            call_duration_s: None,
        }
    }

    fn sample_user() -> UserSeq {
        UserSeq {
            user_id: 1,
            events: vec![
                ev(100, EventType::Data, None, Direction::Outgoing),
                // Incoming local call: correspondent stats only.
                ev(200, EventType::LocalCall, Some("b"), Direction::Incoming),
                ev(300, EventType::LocalSms, Some("a"), Direction::Outgoing),
                ev(2500, EventType::LocalCall, Some("a"), Direction::Outgoing),
                ev(90_000, EventType::Data, None, Direction::Outgoing),
            ],
        }
    }

    #[test]
    fn event_dataset_skips_induced_rows() {
        let users = vec![sample_user()];
        let ds = event_dataset(&users, 1.0, Weekday::Monday);
        assert_eq!(ds.len(), 1);
        let ex = &ds.examples[0];
        // Four generated events give three transitions.
        assert_eq!(ex.len, 3);
        assert_eq!(ex.targets, vec![3.0, 1.0, 0.0]);
        assert_eq!(ex.xs.len(), 3 * EVENT_INPUT_DIM);
        // First input one-hots the data event at t=100.
        assert_eq!(ex.xs[EventType::Data.index()], 1.0);
    }

    #[test]
    fn iet_dataset_bins_the_gaps() {
        let users = vec![sample_user()];
        let ds = iet_dataset(&users, 1.0, Weekday::Monday);
        let ex = &ds.examples[0];
        // Gaps 200, 2200, 87500 fall in bins 0, 1, 2.
        assert_eq!(ex.targets, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn corr_dataset_ranks_against_the_full_trace() {
        let users = vec![sample_user()];
        let ds = corr_dataset(&users, &users, 1.0, Weekday::Monday);
        let ex = &ds.examples[0];
        // Generated interactions: sms to a, call to a. Counts over the full
        // trace are a=2, b=1, so ascending order ranks b=1, a=2.
        assert_eq!(ex.len, 2);
        assert_eq!(ex.targets, vec![2.0, 2.0]);
        assert_eq!(ex.xs[ex.xs.len() - 1], 2.0, "contact count feature");
    }

    #[test]
    fn quantile_cap_truncates_long_examples() {
        let mut long = sample_user();
        for k in 0..40 {
            long.events.push(ev(100_000 + k * 10, EventType::Data, None, Direction::Outgoing));
        }
        long.user_id = 2;
        let users = vec![sample_user(), long];
        let ds = event_dataset(&users, 0.5, Weekday::Monday);
        // Lengths 3 and 43; the 0.5 nearest-rank quantile is 3.
        assert_eq!(ds.padded_len, 3);
        assert!(ds.examples.iter().all(|e| e.len <= 3));
        assert_eq!(ds.examples[1].targets.len(), 3);
    }

    #[test]
    fn batch_layout_is_step_major_with_padding() {
        let users = vec![sample_user()];
        let ds = event_dataset(&users, 1.0, Weekday::Monday);
        let short = SeqExample {
            user_id: 9,
            xs: vec![0.5; EVENT_INPUT_DIM],
            targets: vec![1.0],
            len: 1,
        };
        let batch = make_batch(EVENT_INPUT_DIM, &[&ds.examples[0], &short]);
        assert_eq!(batch.nb, 2);
        assert_eq!(batch.steps, 3);
        assert_eq!(batch.lens, vec![3, 1]);
        assert_eq!(batch.n_valid, 4);
        // Step 0, feature d, column 1 holds the short example's value.
        assert_eq!(batch.xs[0][0 * 2 + 1], 0.5);
        // Steps past the short example's length are zero in its column.
        assert_eq!(batch.xs[1][0 * 2 + 1], 0.0);
        assert_eq!(batch.targets[0][1], 1.0);
    }
}
