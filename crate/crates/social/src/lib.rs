//! Subscriber identities and the social graph: operator assignment, phone
//! and IMEI synthesis, relationship mining from the mobility trace, and a
//! reciprocity-preserving stub-matching graph over mined relationships.

mod graph;
mod identity;
mod relationships;

use thiserror::Error;

pub use graph::{
    build_graph, read_phonebooks, sample_degrees, write_phonebooks, Category, Degrees,
    GraphAudit, PhonebookEntry, PhonebookRow, SocialGraph, PHONEBOOK_HEADER,
};
pub use identity::{
    assign_identities, luhn_check_digit, luhn_valid, read_identities, write_identities,
    PhoneIdentity, IDENTITIES_HEADER, MAX_USERS_PER_OPERATOR,
};
pub use relationships::{mine_relationships, Relationships};

#[derive(Debug, Error)]
pub enum SocialError {
    #[error("operator {mcc_mnc} has {users} users but only {} numbers", MAX_USERS_PER_OPERATOR)]
    DigitSpaceExhausted { mcc_mnc: String, users: usize },
    #[error("trace mentions user {user_id}, but only {n_users} users exist")]
    UnknownUser { user_id: u32, n_users: u32 },
    #[error("input sizes disagree: {degrees} degree rows, {relationships} relationship rows, {identities} identities")]
    SizeMismatch { degrees: usize, relationships: usize, identities: usize },
    #[error("international correspondents need at least one foreign MCC")]
    NoForeignMccs,
    #[error(transparent)]
    Io(#[from] cdrkit_core::io::IoError),
    #[error(transparent)]
    Mobility(#[from] cdrkit_mobility::MobilityError),
}
