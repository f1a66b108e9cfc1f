//! Event, record and trajectory types plus calendar helpers.
//!
//! Timestamps throughout the pipeline are integer seconds relative to the
//! trace start (t = 0 is midnight of day 0). Calendar features are derived
//! from the configured start weekday, never from wall-clock time.

use std::fmt;

/// Event classes a per-user model can emit. Incoming local calls and SMS
/// are induced from outgoing ones when traces are combined; they never
/// appear as a model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventType {
    Data,
    LocalCall,
    IntlCall,
    LocalSms,
}

impl EventType {
    pub const ALL: [EventType; 4] = [
        EventType::Data,
        EventType::LocalCall,
        EventType::IntlCall,
        EventType::LocalSms,
    ];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            EventType::Data => 0,
            EventType::LocalCall => 1,
            EventType::IntlCall => 2,
            EventType::LocalSms => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<EventType> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Data => "data",
            EventType::LocalCall => "local_call",
            EventType::IntlCall => "intl_call",
            EventType::LocalSms => "local_sms",
        }
    }

    pub fn parse(s: &str) -> Option<EventType> {
        match s {
            "data" => Some(EventType::Data),
            "local_call" => Some(EventType::LocalCall),
            "intl_call" => Some(EventType::IntlCall),
            "local_sms" => Some(EventType::LocalSms),
            _ => None,
        }
    }

    /// True for classes that involve a correspondent.
    pub fn is_interaction(self) -> bool {
        !matches!(self, EventType::Data)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Outgoing => "outgoing",
            Direction::Incoming => "incoming",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "outgoing" => Some(Direction::Outgoing),
            "incoming" => Some(Direction::Incoming),
            _ => None,
        }
    }
}

/// Call direction tag on a record: mobile-originated, mobile-terminated,
/// and their international variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallType {
    Mo,
    Mt,
    Imo,
    Imt,
}

impl CallType {
    pub fn as_str(self) -> &'static str {
        match self {
            CallType::Mo => "MO",
            CallType::Mt => "MT",
            CallType::Imo => "IMO",
            CallType::Imt => "IMT",
        }
    }

    pub fn parse(s: &str) -> Option<CallType> {
        match s {
            "MO" => Some(CallType::Mo),
            "MT" => Some(CallType::Mt),
            "IMO" => Some(CallType::Imo),
            "IMT" => Some(CallType::Imt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmsType {
    Mo,
    Mt,
}

impl SmsType {
    pub fn as_str(self) -> &'static str {
        match self {
            SmsType::Mo => "MO",
            SmsType::Mt => "MT",
        }
    }

    pub fn parse(s: &str) -> Option<SmsType> {
        match s {
            "MO" => Some(SmsType::Mo),
            "MT" => Some(SmsType::Mt),
            _ => None,
        }
    }
}

/// Payload of a charging record; the variant decides which CSV columns
/// are populated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordBody {
    Call {
        call_type: CallType,
        /// Seconds, always > 0.
        duration_s: u32,
        correspondent: String,
    },
    Sms {
        sms_type: SmsType,
        correspondent: String,
    },
    Data {
        volume_bytes: u64,
    },
}

/// One charging record as it lands in an operator file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdrRecord {
    pub phone: String,
    pub imei: String,
    pub cell_id: u32,
    pub timestamp: u64,
    pub body: RecordBody,
}

impl CdrRecord {
    pub fn event_kind(&self) -> &'static str {
        match self.body {
            RecordBody::Call { .. } => "call",
            RecordBody::Sms { .. } => "sms",
            RecordBody::Data { .. } => "data",
        }
    }
}

/// One sampled position of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub timestamp: u64,
    pub user_id: u32,
    pub lat: f64,
    pub lon: f64,
}

/// A trajectory point after nearest-station mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellPoint {
    pub timestamp: u64,
    pub user_id: u32,
    pub cell_id: u32,
}

pub const SECONDS_PER_DAY: u64 = 86_400;
pub const SECONDS_PER_WEEK: u64 = 7 * SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
}

impl Weekday {
    pub fn index(self) -> u64 {
        match self {
            Weekday::Monday => 0,
            Weekday::Tuesday => 1,
            Weekday::Wednesday => 2,
            Weekday::Thursday => 3,
            Weekday::Friday => 4,
            Weekday::Saturday => 5,
            Weekday::Sunday => 6,
        }
    }

    pub fn parse(s: &str) -> Option<Weekday> {
        match s {
            "monday" => Some(Weekday::Monday),
            "tuesday" => Some(Weekday::Tuesday),
            "wednesday" => Some(Weekday::Wednesday),
            "thursday" => Some(Weekday::Thursday),
            "friday" => Some(Weekday::Friday),
            "saturday" => Some(Weekday::Saturday),
            "sunday" => Some(Weekday::Sunday),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Monday => "monday",
            Weekday::Tuesday => "tuesday",
            Weekday::Wednesday => "wednesday",
            Weekday::Thursday => "thursday",
            Weekday::Friday => "friday",
            Weekday::Saturday => "saturday",
            Weekday::Sunday => "sunday",
        }
    }
}

/// Inter-event-time classes: up to 30 minutes, 30 minutes to a day, beyond
/// a day. Both edges close on the left bin.
pub const IET_BIN_COUNT: usize = 3;
pub const IET_BIN_EDGES_S: [f64; 2] = [1800.0, 86_400.0];

pub fn iet_bin(iet_s: f64) -> usize {
    if iet_s <= IET_BIN_EDGES_S[0] {
        0
    } else if iet_s <= IET_BIN_EDGES_S[1] {
        1
    } else {
        2
    }
}

/// Day of week (0 = Monday) for a trace-relative timestamp.
pub fn day_of_week(timestamp: u64, start: Weekday) -> u64 {
    (timestamp / SECONDS_PER_DAY + start.index()) % 7
}

pub fn hour_of_day(timestamp: u64) -> u64 {
    (timestamp % SECONDS_PER_DAY) / 3600
}

pub fn second_of_day(timestamp: u64) -> u64 {
    timestamp % SECONDS_PER_DAY
}
