//! Delimited side files: duplicate groups, similar pairs, templates, scanner
//! findings and DApp manifests.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::address::{Address, Digest};
use crate::analytics::{VulnProfile, VulnType};
use crate::cluster::TemplateList;
use crate::dappmatch::DAppManifest;
use crate::evm::DuplicateGroup;
use crate::similarity::{format_score, SimilarityPair};

fn open(path: &Path) -> Result<File, CorpusError> {
    File::open(path).map_err(|e| CorpusError::io(path, e))
}

fn csv_error(e: csv::Error) -> CorpusError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    CorpusError::format(line, e.to_string())
}

/// Reader that ignores `#` comment lines (report headers).
fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

// --- duplicate groups ---

/// A duplicate group with its representative's deployer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRow {
    pub group: DuplicateGroup,
    pub deployer: Address,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    token_hash: Digest,
    representative: Address,
    deployer: Address,
    size: usize,
    members: String,
}

pub fn write_groups<W: Write>(out: W, rows: &[GroupRow]) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["token_hash", "representative", "deployer", "size", "members"])
            .map_err(csv_error)?;
    }
    for row in rows {
        let g = &row.group;
        w.serialize(RawGroup {
            token_hash: g.token_hash,
            representative: g.representative,
            deployer: row.deployer,
            size: g.size(),
            members: g.members.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(CorpusError::Read)
}

pub fn read_groups<R: Read>(input: R) -> Result<Vec<GroupRow>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in csv_reader(input).deserialize::<RawGroup>().enumerate() {
        let raw = raw.map_err(csv_error)?;
        let members = raw
            .members
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Address>, _>>()
            .map_err(|e| CorpusError::format(i + 2, format!("members: {e}")))?;
        if members.len() != raw.size || !members.contains(&raw.representative) {
            return Err(CorpusError::format(i + 2, "member list does not match size/representative"));
        }
        out.push(GroupRow {
            group: DuplicateGroup {
                token_hash: raw.token_hash,
                representative: raw.representative,
                members,
            },
            deployer: raw.deployer,
        });
    }
    Ok(out)
}

pub fn load_groups(path: &Path) -> Result<Vec<GroupRow>, CorpusError> {
    read_groups(open(path)?)
}

// --- similar pairs ---

#[derive(Serialize, Deserialize)]
struct RawPair {
    id_a: Address,
    id_b: Address,
    score: String,
    #[serde(default)]
    distance: Option<usize>,
    #[serde(default)]
    max_len: Option<usize>,
}

/// Rows `id_a,id_b,score` with the score to one decimal, followed by the
/// edit distance and longer fingerprint length that reproduce it exactly.
pub fn write_pairs<W: Write>(out: W, pairs: &[SimilarityPair]) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    if pairs.is_empty() {
        w.write_record(["id_a", "id_b", "score", "distance", "max_len"])
            .map_err(csv_error)?;
    }
    for p in pairs {
        let exact = p.max_len > 0;
        w.serialize(RawPair {
            id_a: p.a,
            id_b: p.b,
            score: format_score(p.score),
            distance: exact.then_some(p.distance),
            max_len: exact.then_some(p.max_len),
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(CorpusError::Read)
}

/// Reads pairs, recomputing exact scores when the distance columns are
/// present. Files with only the first three columns are accepted.
pub fn read_pairs<R: Read>(input: R) -> Result<Vec<SimilarityPair>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in csv_reader(input).deserialize::<RawPair>().enumerate() {
        let raw = raw.map_err(csv_error)?;
        let bad = |msg: &str| CorpusError::format(i + 2, msg.to_string());
        if raw.id_a == raw.id_b {
            return Err(bad("self pair"));
        }
        let pair = match (raw.distance, raw.max_len) {
            (Some(d), Some(m)) if m > 0 && d <= m => SimilarityPair::new(raw.id_a, raw.id_b, d, m),
            (Some(_), Some(_)) => return Err(bad("distance exceeds max_len")),
            _ => {
                let score: f64 = raw.score.parse().map_err(|_| bad("score is not a number"))?;
                if !(0.0..=100.0).contains(&score) {
                    return Err(bad("score outside [0, 100]"));
                }
                SimilarityPair::with_score(raw.id_a, raw.id_b, score)
            }
        };
        out.push(pair);
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<SimilarityPair>, CorpusError> {
    read_pairs(open(path)?)
}

// --- templates ---

#[derive(Deserialize)]
struct RawTemplate {
    token_hash: Digest,
    name: String,
}

/// `token_hash,name` rows.
pub fn read_templates<R: Read>(input: R) -> Result<TemplateList, CorpusError> {
    let mut list = TemplateList::new();
    for raw in csv_reader(input).deserialize::<RawTemplate>() {
        let raw = raw.map_err(csv_error)?;
        list.insert(raw.token_hash, raw.name);
    }
    Ok(list)
}

pub fn load_templates(path: &Path) -> Result<TemplateList, CorpusError> {
    read_templates(open(path)?)
}

// --- scanner findings ---

#[derive(Deserialize)]
struct RawFinding {
    contract_id: Address,
    vuln_type: String,
    count: u32,
}

/// `contract_id,vuln_type,count` rows. Several rows for one contract
/// accumulate; a zero count registers the contract as scanned and clean.
pub fn read_vulns<R: Read>(input: R) -> Result<HashMap<Address, VulnProfile>, CorpusError> {
    let mut out: HashMap<Address, VulnProfile> = HashMap::new();
    for (i, raw) in csv_reader(input).deserialize::<RawFinding>().enumerate() {
        let raw = raw.map_err(csv_error)?;
        let ty: VulnType = raw
            .vuln_type
            .parse()
            .map_err(|e: crate::analytics::AnalyticsError| CorpusError::format(i + 2, e.to_string()))?;
        out.entry(raw.contract_id).or_default().add(ty, raw.count);
    }
    Ok(out)
}

pub fn load_vulns(path: &Path) -> Result<HashMap<Address, VulnProfile>, CorpusError> {
    read_vulns(open(path)?)
}

// --- DApp manifests ---

/// One JSON manifest per line.
pub fn read_dapps<R: BufRead>(input: R) -> Result<Vec<DAppManifest>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(CorpusError::Read)?;
        if line.trim().is_empty() {
            continue;
        }
        let d: DAppManifest = serde_json::from_str(&line).map_err(|e| CorpusError::format(i + 1, e.to_string()))?;
        out.push(d);
    }
    Ok(out)
}

pub fn load_dapps(path: &Path) -> Result<Vec<DAppManifest>, CorpusError> {
    read_dapps(BufReader::new(open(path)?))
}

pub fn write_dapps<W: Write>(mut out: W, dapps: &[DAppManifest]) -> std::io::Result<()> {
    for d in dapps {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Member address to representative address, from duplicate groups.
pub fn representative_index(groups: &[GroupRow]) -> BTreeMap<Address, Address> {
    groups
        .iter()
        .flat_map(|g| g.group.members.iter().map(move |m| (*m, g.group.representative)))
        .collect()
}
