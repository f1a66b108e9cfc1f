//! Phone and handset identities. Every subscriber gets an operator drawn by
//! market share, a unique `<MCC><MNC><5 digits>` number, and a Luhn-valid
//! IMEI.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use cdrkit_core::config::Operator;
use cdrkit_core::io::IoError;

use crate::SocialError;

/// Subscriber line capacity per operator given the 5-digit local part.
pub const MAX_USERS_PER_OPERATOR: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneIdentity {
    pub user_id: u32,
    pub phone: String,
    pub imei: String,
    pub operator: usize,
}

/// Luhn check digit over a string of ASCII digits.
pub fn luhn_check_digit(digits: &str) -> char {
    let mut sum = 0u32;
    // Rightmost payload digit is doubled when the check digit is appended.
    for (i, c) in digits.chars().rev().enumerate() {
        let mut d = c.to_digit(10).expect("digits only");
        if i % 2 == 0 {
            d *= 2;
            if d > 9 {
                d -= 9;
            }
        }
        sum += d;
    }
    char::from_digit((10 - sum % 10) % 10, 10).unwrap()
}

pub fn luhn_valid(digits: &str) -> bool {
    match digits.char_indices().last() {
        Some((i, last)) => luhn_check_digit(&digits[..i]) == last,
        None => false,
    }
}

fn random_imei(rng: &mut impl Rng) -> String {
    // 8-digit type code + 6-digit serial, then the check digit.
    let mut body = String::with_capacity(15);
    body.push_str("35");
    for _ in 0..12 {
        body.push(char::from_digit(rng.gen_range(0..10), 10).unwrap());
    }
    let check = luhn_check_digit(&body);
    body.push(check);
    body
}

pub fn assign_identities(
    n_users: u32,
    operators: &[Operator],
    rng: &mut impl Rng,
) -> Result<Vec<PhoneIdentity>, SocialError> {
    assert!(!operators.is_empty(), "need at least one operator");
    let cum: Vec<f64> = operators
        .iter()
        .scan(0.0, |acc, op| {
            *acc += op.share;
            Some(*acc)
        })
        .collect();
    let total = *cum.last().unwrap();

    let ops: Vec<usize> = (0..n_users)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            cum.iter().position(|&c| u < c).unwrap_or(operators.len() - 1)
        })
        .collect();
    for (k, op) in operators.iter().enumerate() {
        let n = ops.iter().filter(|&&o| o == k).count();
        if n > MAX_USERS_PER_OPERATOR {
            return Err(SocialError::DigitSpaceExhausted { mcc_mnc: op.prefix(), users: n });
        }
    }

    let mut used: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); operators.len()];
    let mut out = Vec::with_capacity(n_users as usize);
    for (uid, &op) in ops.iter().enumerate() {
        let local = loop {
            let candidate = rng.gen_range(0..MAX_USERS_PER_OPERATOR as u32);
            if used[op].insert(candidate) {
                break candidate;
            }
        };
        out.push(PhoneIdentity {
            user_id: uid as u32,
            phone: format!("{}{:05}", operators[op].prefix(), local),
            imei: random_imei(rng),
            operator: op,
        });
    }
    Ok(out)
}

pub const IDENTITIES_HEADER: &str = "user_id,phone,imei,operator";

pub fn write_identities(path: &Path, identities: &[PhoneIdentity]) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut f = std::io::BufWriter::new(file);
    let werr = |e| IoError::io(path, e);
    writeln!(f, "{IDENTITIES_HEADER}").map_err(werr)?;
    for id in identities {
        writeln!(f, "{},{},{},{}", id.user_id, id.phone, id.imei, id.operator).map_err(werr)?;
    }
    f.flush().map_err(werr)
}

pub fn read_identities(path: &Path) -> Result<Vec<PhoneIdentity>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut out = Vec::new();
    for (ln, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        let line = line.trim_end();
        let bad = |msg: String| IoError::parse(path, ln + 1, msg);
        if ln == 0 {
            if line != IDENTITIES_HEADER {
                return Err(bad(format!("expected header `{IDENTITIES_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let [uid, phone, imei, op] = parts[..] else {
            return Err(bad("expected 4 fields".into()));
        };
        out.push(PhoneIdentity {
            user_id: uid.parse().map_err(|_| bad(format!("bad user_id `{uid}`")))?,
            phone: phone.to_string(),
            imei: imei.to_string(),
            operator: op.parse().map_err(|_| bad(format!("bad operator `{op}`")))?,
        });
    }
    Ok(out)
}
