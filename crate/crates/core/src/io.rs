//! CSV readers and writers for the formats stages exchange.
//!
//! All files carry a header row and use plain comma separation; no field
//! ever contains a comma or quote, so no escaping is performed. Floats are
//! written with fixed six-decimal precision (sub-meter at city scale),
//! which keeps reruns byte-identical. Readers stream row by row and report
//! the 1-based line number of the first malformed row.

use crate::types::{
    CallType, CdrRecord, CellPoint, RecordBody, SmsType, TrajectoryPoint,
};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> IoError {
        IoError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: usize, reason: impl Into<String>) -> IoError {
        IoError::Parse { path: path.to_path_buf(), line, reason: reason.into() }
    }
}

pub const TRAJECTORY_HEADER: &str = "timestamp,user_id,lat,lon";
pub const CELLS_HEADER: &str = "timestamp,user_id,cell_id";
pub const STATIONS_HEADER: &str = "cell_id,lat,lon";
pub const CDR_HEADER: &str =
    "phone,imei,cell_id,timestamp,event_type,call_type,call_duration,correspondent,sms_type,data_volume";

/// A radio station with an optional owning operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub cell_id: u32,
    pub lat: f64,
    pub lon: f64,
    pub mcc: Option<String>,
    pub mnc: Option<String>,
}

// ---- generic plumbing ----

/// Streaming row reader shared by every CSV format: checks the header,
/// skips blank lines, and yields `(line_no, row)` pairs.
pub struct RowReader {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

impl RowReader {
    pub fn open(path: &Path, expected_header: &str) -> Result<RowReader, IoError> {
        let file = File::open(path).map_err(|e| IoError::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(IoError::io(path, e)),
            None => return Err(IoError::parse(path, 1, "empty file, expected header")),
        };
        if !header.starts_with(expected_header) {
            return Err(IoError::parse(
                path,
                1,
                format!("unexpected header {header:?}, expected {expected_header:?}"),
            ));
        }
        Ok(RowReader { path: path.to_path_buf(), lines, line_no: 1 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_row(&mut self) -> Option<Result<(usize, String), IoError>> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Ok(l) => {
                    if l.is_empty() {
                        continue;
                    }
                    return Some(Ok((self.line_no, l)));
                }
                Err(e) => return Some(Err(IoError::io(&self.path, e))),
            }
        }
    }
}

pub fn field<'a>(
    parts: &[&'a str],
    idx: usize,
    path: &Path,
    line: usize,
    name: &str,
) -> Result<&'a str, IoError> {
    parts
        .get(idx)
        .copied()
        .ok_or_else(|| IoError::parse(path, line, format!("missing column {name}")))
}

macro_rules! parse_field {
    ($parts:expr, $idx:expr, $ty:ty, $path:expr, $line:expr, $name:expr) => {{
        let raw = field($parts, $idx, $path, $line, $name)?;
        raw.parse::<$ty>().map_err(|_| {
            IoError::parse($path, $line, format!("bad {} value {raw:?}", $name))
        })?
    }};
}

// ---- trajectories ----

pub struct TrajectoryReader(RowReader);

impl TrajectoryReader {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        RowReader::open(path, TRAJECTORY_HEADER).map(TrajectoryReader)
    }
}

impl Iterator for TrajectoryReader {
    type Item = Result<TrajectoryPoint, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, row) = match self.0.next_row()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let path = self.0.path.clone();
        let parts: Vec<&str> = row.split(',').collect();
        let parse = || -> Result<TrajectoryPoint, IoError> {
            Ok(TrajectoryPoint {
                timestamp: parse_field!(&parts, 0, u64, &path, line, "timestamp"),
                user_id: parse_field!(&parts, 1, u32, &path, line, "user_id"),
                lat: parse_field!(&parts, 2, f64, &path, line, "lat"),
                lon: parse_field!(&parts, 3, f64, &path, line, "lon"),
            })
        };
        Some(parse())
    }
}

pub struct TrajectoryWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{TRAJECTORY_HEADER}").map_err(|e| IoError::io(path, e))?;
        Ok(TrajectoryWriter { out, path: path.to_path_buf() })
    }

    pub fn write(&mut self, p: &TrajectoryPoint) -> Result<(), IoError> {
        writeln!(self.out, "{},{},{:.6},{:.6}", p.timestamp, p.user_id, p.lat, p.lon)
            .map_err(|e| IoError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.out.flush().map_err(|e| IoError::io(&self.path, e))
    }
}

pub fn write_trajectory(path: &Path, points: &[TrajectoryPoint]) -> Result<(), IoError> {
    let mut w = TrajectoryWriter::create(path)?;
    for p in points {
        w.write(p)?;
    }
    w.finish()
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryPoint>, IoError> {
    TrajectoryReader::open(path)?.collect()
}

// ---- cell-mapped points ----

pub struct CellReader(RowReader);

impl CellReader {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        RowReader::open(path, CELLS_HEADER).map(CellReader)
    }
}

impl Iterator for CellReader {
    type Item = Result<CellPoint, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, row) = match self.0.next_row()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let path = self.0.path.clone();
        let parts: Vec<&str> = row.split(',').collect();
        let parse = || -> Result<CellPoint, IoError> {
            Ok(CellPoint {
                timestamp: parse_field!(&parts, 0, u64, &path, line, "timestamp"),
                user_id: parse_field!(&parts, 1, u32, &path, line, "user_id"),
                cell_id: parse_field!(&parts, 2, u32, &path, line, "cell_id"),
            })
        };
        Some(parse())
    }
}

pub struct CellWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl CellWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{CELLS_HEADER}").map_err(|e| IoError::io(path, e))?;
        Ok(CellWriter { out, path: path.to_path_buf() })
    }

    pub fn write(&mut self, p: &CellPoint) -> Result<(), IoError> {
        writeln!(self.out, "{},{},{}", p.timestamp, p.user_id, p.cell_id)
            .map_err(|e| IoError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.out.flush().map_err(|e| IoError::io(&self.path, e))
    }
}

pub fn write_cells(path: &Path, points: &[CellPoint]) -> Result<(), IoError> {
    let mut w = CellWriter::create(path)?;
    for p in points {
        w.write(p)?;
    }
    w.finish()
}

pub fn read_cells(path: &Path) -> Result<Vec<CellPoint>, IoError> {
    CellReader::open(path)?.collect()
}

// ---- stations ----

pub fn write_stations(path: &Path, stations: &[Station]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let with_operator = stations.iter().any(|s| s.mcc.is_some());
    let header = if with_operator {
        format!("{STATIONS_HEADER},mcc,mnc")
    } else {
        STATIONS_HEADER.to_string()
    };
    writeln!(out, "{header}").map_err(|e| IoError::io(path, e))?;
    for s in stations {
        if with_operator {
            writeln!(
                out,
                "{},{:.6},{:.6},{},{}",
                s.cell_id,
                s.lat,
                s.lon,
                s.mcc.as_deref().unwrap_or(""),
                s.mnc.as_deref().unwrap_or(""),
            )
            .map_err(|e| IoError::io(path, e))?;
        } else {
            writeln!(out, "{},{:.6},{:.6}", s.cell_id, s.lat, s.lon)
                .map_err(|e| IoError::io(path, e))?;
        }
    }
    out.flush().map_err(|e| IoError::io(path, e))
}

pub fn read_stations(path: &Path) -> Result<Vec<Station>, IoError> {
    let mut reader = RowReader::open(path, STATIONS_HEADER)?;
    let mut out = Vec::new();
    while let Some(row) = reader.next_row() {
        let (line, row) = row?;
        let parts: Vec<&str> = row.split(',').collect();
        let station = Station {
            cell_id: parse_field!(&parts, 0, u32, &reader.path, line, "cell_id"),
            lat: parse_field!(&parts, 1, f64, &reader.path, line, "lat"),
            lon: parse_field!(&parts, 2, f64, &reader.path, line, "lon"),
            mcc: parts.get(3).filter(|s| !s.is_empty()).map(|s| s.to_string()),
            mnc: parts.get(4).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        };
        out.push(station);
    }
    Ok(out)
}

// ---- charging records ----

pub struct CdrWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl CdrWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{CDR_HEADER}").map_err(|e| IoError::io(path, e))?;
        Ok(CdrWriter { out, path: path.to_path_buf() })
    }

    pub fn write(&mut self, r: &CdrRecord) -> Result<(), IoError> {
        // Columns not applicable to the record kind stay empty.
        let (call_type, duration, correspondent, sms_type, volume) = match &r.body {
            RecordBody::Call { call_type, duration_s, correspondent } => (
                call_type.as_str().to_string(),
                duration_s.to_string(),
                correspondent.clone(),
                String::new(),
                String::new(),
            ),
            RecordBody::Sms { sms_type, correspondent } => (
                String::new(),
                String::new(),
                correspondent.clone(),
                sms_type.as_str().to_string(),
                String::new(),
            ),
            RecordBody::Data { volume_bytes } => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                volume_bytes.to_string(),
            ),
        };
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.phone,
            r.imei,
            r.cell_id,
            r.timestamp,
            r.event_kind(),
            call_type,
            duration,
            correspondent,
            sms_type,
            volume,
        )
        .map_err(|e| IoError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.out.flush().map_err(|e| IoError::io(&self.path, e))
    }
}

pub fn write_cdrs(path: &Path, records: &[CdrRecord]) -> Result<(), IoError> {
    let mut w = CdrWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub struct CdrReader(RowReader);

impl CdrReader {
    pub fn open(path: &Path) -> Result<Self, IoError> {
        RowReader::open(path, CDR_HEADER).map(CdrReader)
    }
}

impl Iterator for CdrReader {
    type Item = Result<CdrRecord, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, row) = match self.0.next_row()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let path = self.0.path.clone();
        let parse = || -> Result<CdrRecord, IoError> {
            let parts: Vec<&str> = row.split(',').collect();
            if parts.len() != 10 {
                return Err(IoError::parse(
                    &path,
                    line,
                    format!("expected 10 columns, got {}", parts.len()),
                ));
            }
            let kind = parts[4];
            let body = match kind {
                "call" => RecordBody::Call {
                    call_type: CallType::parse(parts[5]).ok_or_else(|| {
                        IoError::parse(&path, line, format!("bad call_type {:?}", parts[5]))
                    })?,
                    duration_s: parse_field!(&parts, 6, u32, &path, line, "call_duration"),
                    correspondent: parts[7].to_string(),
                },
                "sms" => RecordBody::Sms {
                    sms_type: SmsType::parse(parts[8]).ok_or_else(|| {
                        IoError::parse(&path, line, format!("bad sms_type {:?}", parts[8]))
                    })?,
                    correspondent: parts[7].to_string(),
                },
                "data" => RecordBody::Data {
                    volume_bytes: parse_field!(&parts, 9, u64, &path, line, "data_volume"),
                },
                other => {
                    return Err(IoError::parse(
                        &path,
                        line,
                        format!("bad event_type {other:?}"),
                    ))
                }
            };
            Ok(CdrRecord {
                phone: parts[0].to_string(),
                imei: parts[1].to_string(),
                cell_id: parse_field!(&parts, 2, u32, &path, line, "cell_id"),
                timestamp: parse_field!(&parts, 3, u64, &path, line, "timestamp"),
                body,
            })
        };
        Some(parse())
    }
}

pub fn read_cdrs(path: &Path) -> Result<Vec<CdrRecord>, IoError> {
    CdrReader::open(path)?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CallType, SmsType};

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("cdrkit-core-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn trajectory_roundtrip() {
        let path = tmp("traj.csv");
        let pts = vec![
            TrajectoryPoint { timestamp: 0, user_id: 1, lat: 60.17, lon: 24.94 },
            TrajectoryPoint { timestamp: 60, user_id: 1, lat: 60.171234, lon: 24.945678 },
        ];
        write_trajectory(&path, &pts).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[1].lat - 60.171234).abs() < 1e-9);
        assert_eq!(back[0].user_id, 1);
    }

    #[test]
    fn cdr_roundtrip_all_kinds() {
        let path = tmp("cdr.csv");
        let records = vec![
            CdrRecord {
                phone: "2440512345".into(),
                imei: "490154203237518".into(),
                cell_id: 3,
                timestamp: 1000,
                body: RecordBody::Call {
                    call_type: CallType::Mo,
                    duration_s: 120,
                    correspondent: "2449154321".into(),
                },
            },
            CdrRecord {
                phone: "2440512345".into(),
                imei: "490154203237518".into(),
                cell_id: 3,
                timestamp: 2000,
                body: RecordBody::Sms { sms_type: SmsType::Mt, correspondent: "2440599999".into() },
            },
            CdrRecord {
                phone: "2440512345".into(),
                imei: "490154203237518".into(),
                cell_id: 4,
                timestamp: 3000,
                body: RecordBody::Data { volume_bytes: 1_048_576 },
            },
        ];
        write_cdrs(&path, &records).unwrap();
        let back = read_cdrs(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn stations_optional_operator_columns() {
        let path = tmp("stations.csv");
        let stations = vec![
            Station { cell_id: 0, lat: 60.1, lon: 24.9, mcc: Some("244".into()), mnc: Some("05".into()) },
            Station { cell_id: 1, lat: 60.2, lon: 25.0, mcc: Some("244".into()), mnc: Some("91".into()) },
        ];
        write_stations(&path, &stations).unwrap();
        assert_eq!(read_stations(&path).unwrap(), stations);

        let bare = vec![Station { cell_id: 7, lat: 60.0, lon: 24.0, mcc: None, mnc: None }];
        write_stations(&path, &bare).unwrap();
        assert_eq!(read_stations(&path).unwrap(), bare);
    }

    #[test]
    fn malformed_row_reports_line() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "timestamp,user_id,lat,lon\n0,1,60.0,24.0\n5,x,60.0,24.0\n")
            .unwrap();
        let err = read_trajectory(&path).unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
