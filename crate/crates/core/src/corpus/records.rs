use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::address::{decode_hex, Address};
use crate::evm::{ContractRecord, CreationKind, Dedup};

/// One line of a corpus file.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    address: String,
    deployer: String,
    creation_kind: CreationKind,
    bytecode: String,
    #[serde(default)]
    deployed_at: Option<u64>,
}

/// A corpus line that could not be turned into a record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImportError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub records: Vec<ContractRecord>,
    pub errors: Vec<ImportError>,
}

fn parse_line(line: &str) -> Result<ContractRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id: Address = raw.address.parse().map_err(|e| format!("address: {e}"))?;
    let deployer: Address = raw.deployer.parse().map_err(|e| format!("deployer: {e}"))?;
    let bytecode = decode_hex(&raw.bytecode).map_err(|e| format!("bytecode: {e}"))?;
    if bytecode.is_empty() {
        return Err("bytecode: empty".to_string());
    }
    Ok(ContractRecord {
        id,
        deployer,
        creation_kind: raw.creation_kind,
        bytecode,
        deployed_at: raw.deployed_at,
    })
}

/// Parses a JSON-lines corpus. Blank lines are skipped; malformed entries are
/// collected in `errors` and do not stop the import.
pub fn parse_records<R: BufRead>(reader: R) -> std::io::Result<ImportReport> {
    let mut report = ImportReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(r) => report.records.push(r),
            Err(message) => report.errors.push(ImportError { line: i + 1, message }),
        }
    }
    Ok(report)
}

pub fn import_records(path: &Path) -> Result<ImportReport, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_records(BufReader::new(file)).map_err(|e| CorpusError::io(path, e))
}

pub fn write_records<W: Write>(mut out: W, records: &[ContractRecord]) -> std::io::Result<()> {
    for r in records {
        let raw = RawRecord {
            address: r.id.to_string(),
            deployer: r.deployer.to_string(),
            creation_kind: r.creation_kind,
            bytecode: format!("0x{}", hex::encode(&r.bytecode)),
            deployed_at: r.deployed_at,
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Dataset overview: records by creation kind and what survives each
/// de-duplication step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub source: String,
    pub record_count: usize,
    pub user_created: usize,
    pub contract_created: usize,
    /// Distinct runtime codes once creation and Swarm code are removed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_runtime: Option<usize>,
    /// Distinct token hashes once PUSH immediates are removed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinct_tokens: Option<usize>,
}

impl CorpusManifest {
    pub fn from_records(source: impl Into<String>, records: &[ContractRecord]) -> Self {
        let user_created = records
            .iter()
            .filter(|r| r.creation_kind == CreationKind::UserCreated)
            .count();
        CorpusManifest {
            source: source.into(),
            record_count: records.len(),
            user_created,
            contract_created: records.len() - user_created,
            distinct_runtime: None,
            distinct_tokens: None,
        }
    }

    pub fn with_dedup(mut self, dedup: &Dedup) -> Self {
        self.distinct_runtime = Some(dedup.distinct_runtime_count);
        self.distinct_tokens = Some(dedup.distinct.len());
        self
    }
}
