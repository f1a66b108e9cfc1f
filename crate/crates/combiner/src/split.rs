//! Ownership split: every record lands in the trace of the operator serving
//! its local party, so a cross-operator call shows up once on each side.

use cdrkit_core::config::Operator;
use cdrkit_core::io::{CdrWriter, IoError};
use cdrkit_core::types::CdrRecord;
use cdrkit_social::PhoneIdentity;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn split_by_operator(
    records: &[CdrRecord],
    identities: &[PhoneIdentity],
    n_operators: usize,
) -> Vec<Vec<CdrRecord>> {
    let op_of: BTreeMap<&str, usize> =
        identities.iter().map(|i| (i.phone.as_str(), i.operator)).collect();
    let mut per: Vec<Vec<CdrRecord>> = vec![Vec::new(); n_operators];
    for r in records {
        let op = *op_of
            .get(r.phone.as_str())
            .expect("record owner missing from the identity table");
        per[op].push(r.clone());
    }
    per
}

/// One `cdr_<prefix>.csv` per operator, in operator order. Files for
/// operators without traffic still get written (header only).
pub fn write_operator_files(
    dir: &Path,
    operators: &[Operator],
    per_operator: &[Vec<CdrRecord>],
) -> Result<Vec<PathBuf>, IoError> {
    assert_eq!(operators.len(), per_operator.len());
    let mut paths = Vec::with_capacity(operators.len());
    for (op, records) in operators.iter().zip(per_operator) {
        let path = dir.join(format!("cdr_{}.csv", op.prefix()));
        let mut w = CdrWriter::create(&path)?;
        for r in records {
            w.write(r)?;
        }
        w.finish()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::types::RecordBody;

    fn rec(phone: &str, t: u64) -> CdrRecord {
        CdrRecord {
            phone: phone.into(),
            imei: "350000000000000".into(),
            cell_id: 1,
            timestamp: t,
            body: RecordBody::Data { volume_bytes: 10 },
        }
    }

    fn idn(user_id: u32, phone: &str, operator: usize) -> PhoneIdentity {
        PhoneIdentity {
            user_id,
            phone: phone.into(),
            imei: "350000000000000".into(),
            operator,
        }
    }

    #[test]
    fn records_follow_their_owner() {
        let identities = vec![idn(0, "2440500000", 0), idn(1, "2449100000", 1)];
        let records = vec![rec("2440500000", 5), rec("2449100000", 6), rec("2440500000", 9)];
        let per = split_by_operator(&records, &identities, 2);
        assert_eq!(per[0].len(), 2);
        assert_eq!(per[1].len(), 1);
        assert_eq!(per.iter().map(Vec::len).sum::<usize>(), records.len());
    }

    #[test]
    fn single_operator_takes_everything() {
        let identities = vec![idn(0, "2440500000", 0), idn(1, "2440500001", 0)];
        let records = vec![rec("2440500000", 5), rec("2440500001", 6)];
        let per = split_by_operator(&records, &identities, 1);
        assert_eq!(per[0].len(), 2);
    }
}
