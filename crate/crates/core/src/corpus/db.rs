//! Line-oriented fingerprint database.
//!
//! The first line is a header object naming the format and its version; each
//! following line is one JSON record. Files written under another fingerprint
//! format version are rejected rather than migrated.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::address::{Address, Digest};
use crate::evm::DistinctContract;
use crate::fingerprint::{generate_fp, Fingerprint, FORMAT_VERSION};
use crate::similarity::{CompareEntry, MetaAttributes};

pub const DB_FORMAT: &str = "evmclone-fingerprints";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintRecord {
    pub id: Address,
    pub token_hash: Digest,
    pub runtime_hash: Digest,
    #[serde(flatten)]
    pub meta: MetaAttributes,
    pub fingerprint: Fingerprint,
    #[serde(default)]
    pub truncated_push: bool,
    pub format_version: u32,
}

impl FingerprintRecord {
    pub fn from_distinct(d: &DistinctContract) -> Result<Self, crate::evm::EvmError> {
        Ok(FingerprintRecord {
            id: d.record.id,
            token_hash: d.code.token_hash,
            runtime_hash: d.code.runtime_hash,
            meta: MetaAttributes::of(&d.code),
            fingerprint: generate_fp(&d.code)?,
            truncated_push: d.code.truncated_push,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn compare_entry(&self) -> CompareEntry {
        CompareEntry {
            id: self.id,
            meta: self.meta,
            fingerprint: self.fingerprint.clone(),
        }
    }
}

pub fn write_db<W: Write>(mut out: W, records: &[FingerprintRecord]) -> std::io::Result<()> {
    let header = Header {
        format: DB_FORMAT.to_string(),
        version: FORMAT_VERSION,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial database.
pub fn save_db(path: &Path, records: &[FingerprintRecord]) -> Result<(), CorpusError> {
    let tmp = path.with_extension("tmp");
    let file = File::create(&tmp).map_err(|e| CorpusError::io(&tmp, e))?;
    write_db(BufWriter::new(file), records).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

pub fn read_db<R: BufRead>(reader: R) -> Result<Vec<FingerprintRecord>, CorpusError> {
    let mut lines = reader.lines().enumerate();
    let header_line = match lines.next() {
        Some((_, line)) => line.map_err(CorpusError::Read)?,
        None => return Err(CorpusError::format(1, "missing header")),
    };
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| CorpusError::format(1, format!("header: {e}")))?;
    if header.format != DB_FORMAT {
        return Err(CorpusError::format(1, format!("unexpected format `{}`", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(CorpusError::Version {
            found: header.version,
            expected: FORMAT_VERSION,
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(CorpusError::Read)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FingerprintRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::format(i + 1, e.to_string()))?;
        if record.format_version != FORMAT_VERSION {
            return Err(CorpusError::Version {
                found: record.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if Fingerprint::parse(record.fingerprint.as_str()).is_none() {
            return Err(CorpusError::format(i + 1, "fingerprint outside the base-64 alphabet"));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_db(path: &Path) -> Result<Vec<FingerprintRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_db(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: u64) -> FingerprintRecord {
        FingerprintRecord {
            id: Address::from_low_u64(n),
            token_hash: Digest([n as u8; 32]),
            runtime_hash: Digest([!(n as u8); 32]),
            meta: MetaAttributes {
                opcode_count: 10,
                block_count: 2,
                runtime_byte_len: 14,
            },
            fingerprint: Fingerprint::parse("Ab+/").unwrap(),
            truncated_push: n.is_multiple_of(2),
            format_version: FORMAT_VERSION,
        }
    }

    #[test]
    fn round_trip_in_memory() {
        let records: Vec<_> = (0..5).map(record).collect();
        let mut buf = Vec::new();
        write_db(&mut buf, &records).unwrap();
        assert_eq!(read_db(&buf[..]).unwrap(), records);
    }

    #[test]
    fn header_version_mismatch() {
        let text = format!("{{\"format\":\"{DB_FORMAT}\",\"version\":{}}}\n", FORMAT_VERSION + 1);
        assert!(matches!(read_db(text.as_bytes()), Err(CorpusError::Version { .. })));
    }

    #[test]
    fn record_version_mismatch() {
        let mut r = record(1);
        r.format_version = 0;
        let mut buf = Vec::new();
        write_db(&mut buf, &[r]).unwrap();
        assert!(matches!(read_db(&buf[..]), Err(CorpusError::Version { found: 0, .. })));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_db(&b""[..]), Err(CorpusError::Format { line: 1, .. })));
        assert!(matches!(read_db(&b"{\"format\":\"other\",\"version\":1}\n"[..]), Err(CorpusError::Format { .. })));
        let text = format!("{{\"format\":\"{DB_FORMAT}\",\"version\":{FORMAT_VERSION}}}\n{{\"id\":1}}\n");
        assert!(matches!(read_db(text.as_bytes()), Err(CorpusError::Format { line: 2, .. })));
    }
}
