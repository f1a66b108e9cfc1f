//! Input encodings shared by training and generation. Layout changes here
//! invalidate saved checkpoints, so the dimension constants are asserted in
//! the writers below.

use cdrkit_core::types::{day_of_week, hour_of_day, second_of_day, EventType, Weekday};

/// Day-of-week one-hot, hour-of-day one-hot, and the second-of-day mapped
/// onto the unit circle so 23:59 sits next to 00:00.
pub const TEMPORAL_DIM: usize = 7 + 24 + 2;
pub const EVENT_INPUT_DIM: usize = EventType::COUNT + TEMPORAL_DIM;
pub const IET_INPUT_DIM: usize = TEMPORAL_DIM + EventType::COUNT;
pub const CORR_INPUT_DIM: usize = EventType::COUNT + 7 + 24 + 1;

pub fn encode_temporal(out: &mut [f64], timestamp: u64, start: Weekday) {
    debug_assert_eq!(out.len(), TEMPORAL_DIM);
    out.fill(0.0);
    out[day_of_week(timestamp, start) as usize] = 1.0;
    out[7 + hour_of_day(timestamp) as usize] = 1.0;
    let phase = 2.0 * std::f64::consts::PI * second_of_day(timestamp) as f64 / 86_400.0;
    out[31] = phase.sin();
    out[32] = phase.cos();
}

/// Event-type model: the event that happened and when, predicting what
/// comes next.
pub fn encode_event_input(out: &mut [f64], event: EventType, timestamp: u64, start: Weekday) {
    debug_assert_eq!(out.len(), EVENT_INPUT_DIM);
    out[..EventType::COUNT].fill(0.0);
    out[event.index()] = 1.0;
    encode_temporal(&mut out[EventType::COUNT..], timestamp, start);
}

/// Gap model: when the previous event happened and which type follows,
/// predicting the gap bin in between.
pub fn encode_iet_input(out: &mut [f64], prev_timestamp: u64, next_event: EventType, start: Weekday) {
    debug_assert_eq!(out.len(), IET_INPUT_DIM);
    encode_temporal(&mut out[..TEMPORAL_DIM], prev_timestamp, start);
    let tail = &mut out[TEMPORAL_DIM..];
    tail.fill(0.0);
    tail[next_event.index()] = 1.0;
}

/// Correspondent model: the interaction's own type and time plus how many
/// correspondents the user has, predicting the rank of who it involves.
pub fn encode_corr_input(
    out: &mut [f64],
    event: EventType,
    timestamp: u64,
    start: Weekday,
    n_correspondents: usize,
) {
    debug_assert_eq!(out.len(), CORR_INPUT_DIM);
    out.fill(0.0);
    out[event.index()] = 1.0;
    out[EventType::COUNT + day_of_week(timestamp, start) as usize] = 1.0;
    out[EventType::COUNT + 7 + hour_of_day(timestamp) as usize] = 1.0;
    out[CORR_INPUT_DIM - 1] = n_correspondents as f64;
}
