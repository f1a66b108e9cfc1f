//! Prediction streams from trained models: per-step class probabilities for
//! the event and gap heads, scalar friendship degrees for the rank head, and
//! the bin-to-minutes bridge used when scoring gaps against continuous truth.

use crate::streams::{ClassStream, UserCorrSteps, UserEventSteps, UserGapSteps, ValueStream};
use cdrkit_core::rng::RngFactory;
use cdrkit_core::types::Weekday;
use cdrkit_seqmodel::{
    encode_corr_input, encode_event_input, encode_iet_input, softmax, step_state, LstmParams,
    LstmState, CORR_INPUT_DIM, EVENT_INPUT_DIM, IET_INPUT_DIM,
};
use cdrkit_statmodel::IetSampler;

pub fn lstm_event_streams(
    params: &LstmParams,
    users: &[UserEventSteps],
    start: Weekday,
) -> Vec<ClassStream> {
    let mut x = vec![0.0; EVENT_INPUT_DIM];
    users
        .iter()
        .map(|u| {
            let mut st = LstmState::new(params);
            let mut probs = Vec::with_capacity(u.steps.len());
            let mut truth = Vec::with_capacity(u.steps.len());
            for s in &u.steps {
                encode_event_input(&mut x, s.prev, s.prev_t, start);
                probs.push(softmax(&step_state(params, &mut st, &x)));
                truth.push(s.next.index());
            }
            ClassStream { user_id: u.user_id, probs, truth }
        })
        .collect()
}

pub fn lstm_iet_streams(
    params: &LstmParams,
    users: &[UserGapSteps],
    start: Weekday,
) -> Vec<ClassStream> {
    let mut x = vec![0.0; IET_INPUT_DIM];
    users
        .iter()
        .map(|u| {
            let mut st = LstmState::new(params);
            let mut probs = Vec::with_capacity(u.steps.len());
            let mut truth = Vec::with_capacity(u.steps.len());
            for s in &u.steps {
                encode_iet_input(&mut x, s.prev_t, s.next, start);
                probs.push(softmax(&step_state(params, &mut st, &x)));
                truth.push(s.bin);
            }
            ClassStream { user_id: u.user_id, probs, truth }
        })
        .collect()
}

pub fn lstm_corr_streams(
    params: &LstmParams,
    users: &[UserCorrSteps],
    start: Weekday,
) -> Vec<ValueStream> {
    let mut x = vec![0.0; CORR_INPUT_DIM];
    users
        .iter()
        .map(|u| {
            let mut st = LstmState::new(params);
            let mut pred = Vec::with_capacity(u.steps.len());
            let mut truth = Vec::with_capacity(u.steps.len());
            for s in &u.steps {
                encode_corr_input(&mut x, s.event, s.t, start, u.n_corr);
                let y = step_state(params, &mut st, &x);
                pred.push(y[0].round().clamp(1.0, u.n_corr as f64));
                truth.push(s.rank as f64);
            }
            ValueStream { user_id: u.user_id, pred, truth, bins: Vec::new() }
        })
        .collect()
}

/// Continuous gap estimates in minutes from per-step bin probabilities: take
/// the argmax bin and average `n_samples` truncated draws from its fitted
/// distribution. Truth comes from the aligned gap steps.
pub fn iet_minutes_from_bins(
    bin_streams: &[ClassStream],
    gaps: &[UserGapSteps],
    sampler: &IetSampler,
    n_samples: usize,
    factory: &RngFactory,
    label: &str,
) -> Vec<ValueStream> {
    bin_streams
        .iter()
        .zip(gaps)
        .map(|(cs, gs)| {
            debug_assert_eq!(cs.user_id, gs.user_id);
            let mut rng = factory.stream(&format!("eval/{label}/{}", cs.user_id));
            let mut pred = Vec::with_capacity(cs.probs.len());
            let mut truth = Vec::with_capacity(cs.probs.len());
            let mut bins = Vec::with_capacity(cs.probs.len());
            for (p, s) in cs.probs.iter().zip(&gs.steps) {
                let bin = argmax(p);
                pred.push(sampler.sample_mean(bin, n_samples, &mut rng) / 60.0);
                truth.push(s.gap_s / 60.0);
                bins.push(s.bin);
            }
            ValueStream { user_id: cs.user_id, pred, truth, bins }
        })
        .collect()
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}
