//! Empirical statistics pulled out of an ingested reference trace. These
//! feed the social graph (correspondent counts and category shares), the
//! statistical samplers (per-bin gap samples, call durations), and the
//! sequence models (padding lengths, marginals).

use crate::event::RefEvent;
use crate::ingest::{is_generated, UserSeq};
use cdrkit_core::io::IoError;
use cdrkit_core::types::{iet_bin, Direction, EventType, IET_BIN_COUNT};
use rand::Rng;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Cap on persisted sample vectors. Above it, samples are thinned by
/// keeping every k-th element, which stays deterministic.
const SAMPLE_CAP: usize = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot extract statistics from an empty trace")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefStats {
    /// `corr_count_dist[k]` = share of users with exactly k correspondents;
    /// index 0 is always zero, support ends at the empirical maximum.
    pub corr_count_dist: Vec<f64>,
    /// Mean per-user correspondent share in each category:
    /// (international, outgoing-only, incoming-only, both-ways).
    pub category_means: [f64; 4],
    /// Continuous gap samples between consecutive generated events, split
    /// at the 30-minute and 24-hour boundaries.
    pub iet_samples_per_bin: [Vec<f64>; IET_BIN_COUNT],
    pub call_durations: Vec<f64>,
    /// Per-user generated-event counts, ascending.
    pub seq_lens: Vec<u32>,
    /// Share of each event class among generated events.
    pub event_type_marginals: [f64; 4],
}

impl RefStats {
    pub fn max_corr_count(&self) -> usize {
        self.corr_count_dist.len().saturating_sub(1)
    }

    /// Draw a correspondent count from the empirical distribution. Returns
    /// 0 only if the reference had no interacting users at all.
    pub fn sample_corr_count<R: Rng>(&self, rng: &mut R) -> usize {
        let total: f64 = self.corr_count_dist.iter().sum();
        if total <= 0.0 {
            return 0;
        }
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (k, p) in self.corr_count_dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.max_corr_count()
    }

    /// Nearest-rank quantile of the generated-sequence lengths.
    pub fn seq_len_quantile(&self, q: f64) -> usize {
        assert!((0.0..=1.0).contains(&q), "quantile out of range: {q}");
        if self.seq_lens.is_empty() {
            return 0;
        }
        let n = self.seq_lens.len();
        let idx = ((n as f64 * q).ceil() as usize).clamp(1, n) - 1;
        self.seq_lens[idx] as usize
    }
}

/// Order a user's correspondents by increasing interaction count (ties by
/// correspondent id) and return them with their 1-based rank. The rank of
/// the correspondent of an event is the regression target of the
/// correspondent model.
pub fn friendship_ranks(events: &[RefEvent]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for ev in events {
        if let Some(c) = ev.correspondent_id.as_deref() {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    let mut ordered: Vec<(&str, u64)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    ordered
        .into_iter()
        .enumerate()
        .map(|(i, (id, _))| (id.to_string(), i + 1))
        .collect()
}

pub fn extract_stats(seqs: &[UserSeq]) -> Result<RefStats, StatsError> {
    if seqs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut corr_hist: Vec<u64> = Vec::new();
    let mut cat_sums = [0.0f64; 4];
    let mut n_with_corr = 0u64;
    let mut iet_samples: [Vec<f64>; IET_BIN_COUNT] = Default::default();
    let mut call_durations = Vec::new();
    let mut seq_lens = Vec::with_capacity(seqs.len());
    let mut type_counts = [0u64; 4];

    for seq in seqs {
        let mut last_generated: Option<u64> = None;
        let mut gen_count = 0u32;
        // id -> (outgoing seen, incoming seen, international)
        let mut corr: BTreeMap<&str, (bool, bool, bool)> = BTreeMap::new();
        for ev in &seq.events {
            if let Some(d) = ev.call_duration_s {
                call_durations.push(d as f64);
            }
            if let Some(c) = ev.correspondent_id.as_deref() {
                let entry = corr.entry(c).or_insert((false, false, false));
                match ev.direction {
                    Direction::Outgoing => entry.0 = true,
                    Direction::Incoming => entry.1 = true,
                }
                entry.2 |= ev.event_type == EventType::IntlCall;
            }
            if is_generated(ev) {
                gen_count += 1;
                type_counts[ev.event_type.index()] += 1;
                if let Some(prev) = last_generated {
                    let gap = (ev.timestamp - prev) as f64;
                    iet_samples[iet_bin(gap)].push(gap);
                }
                last_generated = Some(ev.timestamp);
            }
        }
        seq_lens.push(gen_count);

        let n_corr = corr.len();
        if n_corr > 0 {
            if corr_hist.len() <= n_corr {
                corr_hist.resize(n_corr + 1, 0);
            }
            corr_hist[n_corr] += 1;
            n_with_corr += 1;
            let mut counts = [0usize; 4];
            for &(out, inc, intl) in corr.values() {
                let cat = if intl {
                    0
                } else if out && inc {
                    3
                } else if out {
                    1
                } else {
                    2
                };
                counts[cat] += 1;
            }
            for (sum, &c) in cat_sums.iter_mut().zip(&counts) {
                *sum += c as f64 / n_corr as f64;
            }
        }
    }

    let total_events: u64 = type_counts.iter().sum();
    if total_events == 0 {
        return Err(StatsError::EmptyInput);
    }
    let mut event_type_marginals = [0.0f64; 4];
    for (m, &c) in event_type_marginals.iter_mut().zip(&type_counts) {
        *m = c as f64 / total_events as f64;
    }

    let users_total: u64 = corr_hist.iter().sum();
    let corr_count_dist = if users_total == 0 {
        vec![0.0]
    } else {
        corr_hist.iter().map(|&c| c as f64 / users_total as f64).collect()
    };
    let category_means = if n_with_corr == 0 {
        [0.0; 4]
    } else {
        [
            cat_sums[0] / n_with_corr as f64,
            cat_sums[1] / n_with_corr as f64,
            cat_sums[2] / n_with_corr as f64,
            cat_sums[3] / n_with_corr as f64,
        ]
    };

    seq_lens.sort_unstable();
    for bin in iet_samples.iter_mut() {
        thin(bin);
    }
    thin(&mut call_durations);

    Ok(RefStats {
        corr_count_dist,
        category_means,
        iet_samples_per_bin: iet_samples,
        call_durations,
        seq_lens,
        event_type_marginals,
    })
}

fn thin(samples: &mut Vec<f64>) {
    if samples.len() <= SAMPLE_CAP {
        return;
    }
    let stride = samples.len().div_ceil(SAMPLE_CAP);
    let mut kept = 0;
    for i in (0..samples.len()).step_by(stride) {
        samples[kept] = samples[i];
        kept += 1;
    }
    samples.truncate(kept);
}

// ---- persistence ----

const STATS_HEADER: &str = "refstats,v1";

fn write_floats(out: &mut impl Write, key: &str, vals: &[f64]) -> std::io::Result<()> {
    write!(out, "{key}")?;
    for v in vals {
        write!(out, ",{v}")?;
    }
    writeln!(out)
}

pub fn write_stats(path: &Path, stats: &RefStats) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let run = |r: std::io::Result<()>| r.map_err(|e| IoError::io(path, e));
    run(writeln!(out, "{STATS_HEADER}"))?;
    run(write_floats(&mut out, "corr_count_dist", &stats.corr_count_dist))?;
    run(write_floats(&mut out, "category_means", &stats.category_means))?;
    run(write_floats(&mut out, "event_type_marginals", &stats.event_type_marginals))?;
    let lens: Vec<f64> = stats.seq_lens.iter().map(|&l| l as f64).collect();
    run(write_floats(&mut out, "seq_lens", &lens))?;
    run(write_floats(&mut out, "call_durations", &stats.call_durations))?;
    for (i, bin) in stats.iet_samples_per_bin.iter().enumerate() {
        run(write_floats(&mut out, &format!("iet_bin{i}"), bin))?;
    }
    run(out.flush())
}

pub fn read_stats(path: &Path) -> Result<RefStats, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h == STATS_HEADER => {}
        Some((_, Ok(h))) => return Err(IoError::parse(path, 1, format!("bad header {h:?}"))),
        Some((_, Err(e))) => return Err(IoError::io(path, e)),
        None => return Err(IoError::parse(path, 1, "empty stats file")),
    }
    let mut next_line = |expect_key: &str| -> Result<Vec<f64>, IoError> {
        match lines.next() {
            Some((i, Ok(line))) => {
                let mut parts = line.split(',');
                let key = parts.next().unwrap_or("");
                if key != expect_key {
                    return Err(IoError::parse(
                        path,
                        i + 1,
                        format!("expected section {expect_key:?}, found {key:?}"),
                    ));
                }
                parts
                    .map(|p| {
                        p.parse::<f64>().map_err(|_| {
                            IoError::parse(path, i + 1, format!("bad float {p:?}"))
                        })
                    })
                    .collect()
            }
            Some((_, Err(e))) => Err(IoError::io(path, e)),
            None => Err(IoError::parse(path, 0, format!("missing section {expect_key:?}"))),
        }
    };

    let corr_count_dist = next_line("corr_count_dist")?;
    let category_means = fixed4(next_line("category_means")?, path, "category_means")?;
    let event_type_marginals =
        fixed4(next_line("event_type_marginals")?, path, "event_type_marginals")?;
    let seq_lens: Vec<u32> = next_line("seq_lens")?.into_iter().map(|v| v as u32).collect();
    let call_durations = next_line("call_durations")?;
    let bin0 = next_line("iet_bin0")?;
    let bin1 = next_line("iet_bin1")?;
    let bin2 = next_line("iet_bin2")?;
    Ok(RefStats {
        corr_count_dist,
        category_means,
        iet_samples_per_bin: [bin0, bin1, bin2],
        call_durations,
        seq_lens,
        event_type_marginals,
    })
}

fn fixed4(vals: Vec<f64>, path: &Path, key: &str) -> Result<[f64; 4], IoError> {
    <[f64; 4]>::try_from(vals)
        .map_err(|v| IoError::parse(path, 0, format!("{key} needs 4 values, got {}", v.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ingest_events;

    fn interaction(
        user: u32,
        t: u64,
        kind: EventType,
        corr: &str,
        dir: Direction,
    ) -> RefEvent {
        RefEvent {
            timestamp: t,
            user_id: user,
            event_type: kind,
            correspondent_id: Some(corr.to_string()),
            direction: dir,
            call_duration_s: (kind == EventType::LocalCall || kind == EventType::IntlCall)
                .then_some(60),
        }
    }

    fn user_with_corrs(user: u32, n: usize, t0: u64) -> Vec<RefEvent> {
        (0..n.max(3))
            .map(|i| {
                interaction(
                    user,
                    t0 + 100 * i as u64,
                    EventType::LocalSms,
                    &format!("c{}", i.min(n - 1)),
                    Direction::Outgoing,
                )
            })
            .collect()
    }

    #[test]
    fn corr_count_distribution_counts_users() {
        let mut events = user_with_corrs(1, 2, 0);
        events.extend(user_with_corrs(2, 2, 0));
        events.extend(user_with_corrs(3, 4, 0));
        let stats = extract_stats(&ingest_events(events)).unwrap();
        assert_eq!(stats.max_corr_count(), 4);
        assert!((stats.corr_count_dist[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((stats.corr_count_dist[4] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats.corr_count_dist[0], 0.0);
    }

    #[test]
    fn all_bidirectional_correspondents_mean_both() {
        let events = vec![
            interaction(1, 0, EventType::LocalCall, "a", Direction::Outgoing),
            interaction(1, 10, EventType::LocalCall, "a", Direction::Incoming),
            interaction(1, 20, EventType::LocalSms, "b", Direction::Outgoing),
            interaction(1, 30, EventType::LocalCall, "b", Direction::Incoming),
            interaction(1, 40, EventType::LocalSms, "a", Direction::Outgoing),
        ];
        let stats = extract_stats(&ingest_events(events)).unwrap();
        assert_eq!(stats.category_means, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn categories_split_by_direction_and_origin() {
        let events = vec![
            // "a": outgoing only; "b": incoming only; "i": international.
            interaction(1, 0, EventType::LocalSms, "a", Direction::Outgoing),
            interaction(1, 10, EventType::LocalCall, "b", Direction::Incoming),
            interaction(1, 20, EventType::IntlCall, "i", Direction::Outgoing),
            interaction(1, 30, EventType::LocalSms, "a", Direction::Outgoing),
        ];
        let stats = extract_stats(&ingest_events(events)).unwrap();
        let third = 1.0 / 3.0;
        for (got, expect) in stats.category_means.iter().zip([third, third, third, 0.0]) {
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gaps_split_on_bin_boundaries() {
        let mut events = Vec::new();
        let mut t = 0;
        // Gaps: 1800 (first bin), 1801 (second), 86400 (second), 86401 (third).
        for gap in [1800u64, 1801, 86_400, 86_401] {
            events.push(RefEvent {
                timestamp: t,
                user_id: 1,
                event_type: EventType::Data,
                correspondent_id: None,
                direction: Direction::Outgoing,
                call_duration_s: None,
            });
            t += gap;
        }
        events.push(RefEvent {
            timestamp: t,
            user_id: 1,
            event_type: EventType::Data,
            correspondent_id: None,
            direction: Direction::Outgoing,
            call_duration_s: None,
        });
        let stats = extract_stats(&ingest_events(events)).unwrap();
        assert_eq!(stats.iet_samples_per_bin[0], vec![1800.0]);
        assert_eq!(stats.iet_samples_per_bin[1], vec![1801.0, 86_400.0]);
        assert_eq!(stats.iet_samples_per_bin[2], vec![86_401.0]);
    }

    #[test]
    fn incoming_rows_break_no_gaps_and_skip_marginals() {
        let events = vec![
            RefEvent {
                timestamp: 0,
                user_id: 1,
                event_type: EventType::Data,
                correspondent_id: None,
                direction: Direction::Outgoing,
                call_duration_s: None,
            },
            // Induced incoming call in the middle of a 200 s data gap.
            interaction(1, 100, EventType::LocalCall, "x", Direction::Incoming),
            RefEvent {
                timestamp: 200,
                user_id: 1,
                event_type: EventType::Data,
                correspondent_id: None,
                direction: Direction::Outgoing,
                call_duration_s: None,
            },
            RefEvent {
                timestamp: 300,
                user_id: 1,
                event_type: EventType::Data,
                correspondent_id: None,
                direction: Direction::Outgoing,
                call_duration_s: None,
            },
        ];
        let stats = extract_stats(&ingest_events(events)).unwrap();
        assert_eq!(stats.iet_samples_per_bin[0], vec![200.0, 100.0]);
        assert_eq!(stats.event_type_marginals, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(stats.seq_lens, vec![3]);
    }

    #[test]
    fn ranks_ascend_by_count_with_id_ties() {
        let events = vec![
            interaction(1, 0, EventType::LocalSms, "b", Direction::Outgoing),
            interaction(1, 10, EventType::LocalSms, "a", Direction::Outgoing),
            interaction(1, 20, EventType::LocalSms, "c", Direction::Outgoing),
            interaction(1, 30, EventType::LocalSms, "c", Direction::Outgoing),
        ];
        let ranks = friendship_ranks(&events);
        assert_eq!(
            ranks,
            vec![("a".to_string(), 1), ("b".to_string(), 2), ("c".to_string(), 3)]
        );
    }

    #[test]
    fn quantile_uses_nearest_rank() {
        let stats = RefStats {
            corr_count_dist: vec![0.0, 1.0],
            category_means: [0.0, 1.0, 0.0, 0.0],
            iet_samples_per_bin: Default::default(),
            call_durations: vec![],
            seq_lens: (1..=10).collect(),
            event_type_marginals: [1.0, 0.0, 0.0, 0.0],
        };
        assert_eq!(stats.seq_len_quantile(0.9), 9);
        assert_eq!(stats.seq_len_quantile(1.0), 10);
        assert_eq!(stats.seq_len_quantile(0.0), 1);
    }

    #[test]
    fn stats_roundtrip_through_file() {
        let mut events = user_with_corrs(1, 3, 0);
        events.extend(user_with_corrs(2, 5, 7));
        events.push(interaction(2, 100_000, EventType::LocalCall, "c0", Direction::Incoming));
        let stats = extract_stats(&ingest_events(events)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        write_stats(&path, &stats).unwrap();
        assert_eq!(read_stats(&path).unwrap(), stats);
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert_eq!(extract_stats(&[]).unwrap_err(), StatsError::EmptyInput);
    }

    #[test]
    fn thinning_caps_long_sample_vectors() {
        let mut v: Vec<f64> = (0..SAMPLE_CAP * 2 + 10).map(|i| i as f64).collect();
        thin(&mut v);
        assert!(v.len() <= SAMPLE_CAP);
        assert_eq!(v[0], 0.0);
        // 400_010 elements need stride 3 to fit under the cap.
        assert_eq!(v[1], 3.0);
    }
}
