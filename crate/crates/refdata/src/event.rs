//! One reference-trace row: a timestamped event seen from one user's side.

use cdrkit_core::io::{field, IoError, RowReader};
use cdrkit_core::types::{Direction, EventType};
use std::io::{BufWriter, Write};
use std::path::Path;

pub const REF_HEADER: &str =
    "timestamp,user_id,event_type,correspondent_id,direction,call_duration";

/// A single reference event. The row describes the event from `user_id`'s
/// perspective only; the correspondent's own trace is a separate set of
/// rows and is not required to mirror it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefEvent {
    pub timestamp: u64,
    pub user_id: u32,
    pub event_type: EventType,
    /// Present for calls and SMS, absent for data sessions.
    pub correspondent_id: Option<String>,
    pub direction: Direction,
    /// Seconds, calls only.
    pub call_duration_s: Option<u32>,
}

impl RefEvent {
    fn to_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.timestamp,
            self.user_id,
            self.event_type.as_str(),
            self.correspondent_id.as_deref().unwrap_or(""),
            self.direction.as_str(),
            self.call_duration_s.map(|d| d.to_string()).unwrap_or_default(),
        )
    }
}

pub fn write_ref_events(path: &Path, events: &[RefEvent]) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let werr = |e| IoError::io(path, e);
    writeln!(out, "{REF_HEADER}").map_err(werr)?;
    for ev in events {
        writeln!(out, "{}", ev.to_row()).map_err(werr)?;
    }
    out.flush().map_err(werr)
}

pub struct RefEventReader(RowReader);

impl RefEventReader {
    pub fn open(path: &Path) -> Result<RefEventReader, IoError> {
        Ok(RefEventReader(RowReader::open(path, REF_HEADER)?))
    }
}

impl Iterator for RefEventReader {
    type Item = Result<RefEvent, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, row) = match self.0.next_row()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        Some(parse_row(&row, self.0.path(), line))
    }
}

fn parse_row(row: &str, path: &Path, line: usize) -> Result<RefEvent, IoError> {
    let parts: Vec<&str> = row.split(',').collect();
    if parts.len() != 6 {
        return Err(IoError::parse(path, line, format!("expected 6 columns, got {}", parts.len())));
    }
    let timestamp = parse_num::<u64>(&parts, 0, "timestamp", path, line)?;
    let user_id = parse_num::<u32>(&parts, 1, "user_id", path, line)?;
    let raw_type = field(&parts, 2, path, line, "event_type")?;
    let event_type = EventType::parse(raw_type)
        .ok_or_else(|| IoError::parse(path, line, format!("bad event_type {raw_type:?}")))?;
    let raw_corr = field(&parts, 3, path, line, "correspondent_id")?;
    let correspondent_id = (!raw_corr.is_empty()).then(|| raw_corr.to_string());
    let raw_dir = field(&parts, 4, path, line, "direction")?;
    let direction = Direction::parse(raw_dir)
        .ok_or_else(|| IoError::parse(path, line, format!("bad direction {raw_dir:?}")))?;
    let raw_dur = field(&parts, 5, path, line, "call_duration")?;
    let call_duration_s = if raw_dur.is_empty() {
        None
    } else {
        Some(raw_dur.parse::<u32>().map_err(|_| {
            IoError::parse(path, line, format!("bad call_duration value {raw_dur:?}"))
        })?)
    };
    if event_type.is_interaction() && correspondent_id.is_none() {
        return Err(IoError::parse(path, line, "interaction row lacks correspondent_id"));
    }
    Ok(RefEvent { timestamp, user_id, event_type, correspondent_id, direction, call_duration_s })
}

fn parse_num<T: std::str::FromStr>(
    parts: &[&str],
    idx: usize,
    name: &str,
    path: &Path,
    line: usize,
) -> Result<T, IoError> {
    let raw = field(parts, idx, path, line, name)?;
    raw.parse::<T>()
        .map_err(|_| IoError::parse(path, line, format!("bad {name} value {raw:?}")))
}

pub fn read_ref_events(path: &Path) -> Result<Vec<RefEvent>, IoError> {
    RefEventReader::open(path)?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_events() -> Vec<RefEvent> {
        vec![
            RefEvent {
                timestamp: 10,
                user_id: 1,
                event_type: EventType::Data,
                correspondent_id: None,
                direction: Direction::Outgoing,
                call_duration_s: None,
            },
            RefEvent {
                timestamp: 55,
                user_id: 1,
                event_type: EventType::LocalCall,
                correspondent_id: Some("2".into()),
                direction: Direction::Outgoing,
                call_duration_s: Some(93),
            },
            RefEvent {
                timestamp: 70,
                user_id: 2,
                event_type: EventType::IntlCall,
                correspondent_id: Some("intl:2:0".into()),
                direction: Direction::Incoming,
                call_duration_s: Some(12),
            },
        ]
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        let events = sample_events();
        write_ref_events(&path, &events).unwrap();
        assert_eq!(read_ref_events(&path).unwrap(), events);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        std::fs::write(&path, format!("{REF_HEADER}\n10,1,data,,outgoing,\nnot-a-row\n"))
            .unwrap();
        let err = read_ref_events(&path).unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn interaction_without_correspondent_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        std::fs::write(&path, format!("{REF_HEADER}\n10,1,local_call,,outgoing,30\n")).unwrap();
        assert!(read_ref_events(&path).is_err());
    }
}
