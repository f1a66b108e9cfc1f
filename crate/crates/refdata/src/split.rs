//! Train/validation/test splitting. Long traces are cut chronologically
//! (weeks 1-2 / 3 / 4+) so every user contributes to every split; short
//! traces are partitioned by user 60/20/20 instead.

use crate::ingest::UserSeq;
use cdrkit_core::config::SplitMode;
use cdrkit_core::rng::RngFactory;
use cdrkit_core::types::SECONDS_PER_WEEK;
use rand::seq::SliceRandom;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// Seed for the user shuffle in by-user mode.
    pub seed: u64,
    /// Total trace duration; decides feasibility and the auto mode.
    pub duration_s: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("chronological split needs at least 4 weeks of trace, got {duration_s} s")]
    TraceTooShort { duration_s: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<UserSeq>,
    pub valid: Vec<UserSeq>,
    pub test: Vec<UserSeq>,
}

pub fn split(seqs: &[UserSeq], spec: &SplitSpec) -> Result<Splits, SplitError> {
    let mode = match spec.mode {
        SplitMode::Auto => {
            if spec.duration_s >= 4 * SECONDS_PER_WEEK {
                SplitMode::Chronological
            } else {
                SplitMode::ByUser
            }
        }
        m => m,
    };
    match mode {
        SplitMode::Chronological => chronological(seqs, spec.duration_s),
        SplitMode::ByUser => Ok(by_user(seqs, spec.seed)),
        SplitMode::Auto => unreachable!("auto resolved above"),
    }
}

/// Weeks 1-2 train, week 3 validation, everything from week 4 on test.
/// Every user keeps a (possibly empty) sequence in each split.
fn chronological(seqs: &[UserSeq], duration_s: u64) -> Result<Splits, SplitError> {
    if duration_s < 4 * SECONDS_PER_WEEK {
        return Err(SplitError::TraceTooShort { duration_s });
    }
    let t_train = 2 * SECONDS_PER_WEEK;
    let t_valid = 3 * SECONDS_PER_WEEK;
    let mut out = Splits { train: Vec::new(), valid: Vec::new(), test: Vec::new() };
    for seq in seqs {
        let slice = |lo: u64, hi: u64| UserSeq {
            user_id: seq.user_id,
            events: seq
                .events
                .iter()
                .filter(|e| e.timestamp >= lo && e.timestamp < hi)
                .cloned()
                .collect(),
        };
        out.train.push(slice(0, t_train));
        out.valid.push(slice(t_train, t_valid));
        out.test.push(slice(t_valid, u64::MAX));
    }
    Ok(out)
}

/// Disjoint 60/20/20 user partition, shuffled by seed, each split sorted
/// by user id again.
fn by_user(seqs: &[UserSeq], seed: u64) -> Splits {
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut rng = RngFactory::new(seed).stream("refdata/split-by-user");
    order.shuffle(&mut rng);
    let n = seqs.len();
    let n_train = n * 60 / 100;
    let n_valid = n * 20 / 100;
    let pick = |idxs: &[usize]| {
        let mut part: Vec<UserSeq> = idxs.iter().map(|&i| seqs[i].clone()).collect();
        part.sort_by_key(|s| s.user_id);
        part
    };
    Splits {
        train: pick(&order[..n_train]),
        valid: pick(&order[n_train..n_train + n_valid]),
        test: pick(&order[n_train + n_valid..]),
    }
}
