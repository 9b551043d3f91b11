use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::{preprocess, ContractRecord, EvmError, InputKind, TokenizedCode};
use crate::address::{Address, Digest};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinctContract {
    pub record: ContractRecord,
    pub code: TokenizedCode,
}

/// All records sharing one token hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateGroup {
    pub token_hash: Digest,
    pub representative: Address,
    /// Sorted by address; includes the representative.
    pub members: Vec<Address>,
}

impl DuplicateGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dedup {
    /// One entry per token hash, sorted by representative address.
    pub distinct: Vec<DistinctContract>,
    pub groups: BTreeMap<Digest, DuplicateGroup>,
    /// Distinct runtime codes after creation/Swarm removal but before
    /// immediates are dropped.
    pub distinct_runtime_count: usize,
}

impl Dedup {
    pub fn record_count(&self) -> usize {
        self.groups.values().map(DuplicateGroup::size).sum()
    }
}

// earliest deployment first; unknown deployment time sorts last
fn representative_order(a: &ContractRecord, b: &ContractRecord) -> Ordering {
    match (a.deployed_at, b.deployed_at) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.id.cmp(&b.id))
}

/// Groups a corpus by token hash. Fails on the first record whose bytecode
/// cannot be pre-processed.
pub fn dedup<'a, I>(corpus: I, kind: InputKind) -> Result<Dedup, EvmError>
where
    I: IntoIterator<Item = &'a ContractRecord>,
{
    let mut best: BTreeMap<Digest, (&ContractRecord, TokenizedCode)> = BTreeMap::new();
    let mut members: BTreeMap<Digest, Vec<Address>> = BTreeMap::new();
    let mut runtime_hashes = BTreeSet::new();

    for record in corpus {
        let code = preprocess(&record.bytecode, kind).map_err(|e| EvmError::Record {
            id: record.id,
            source: Box::new(e),
        })?;
        runtime_hashes.insert(code.runtime_hash);
        members.entry(code.token_hash).or_default().push(record.id);
        match best.get_mut(&code.token_hash) {
            Some(slot) => {
                if representative_order(record, slot.0) == Ordering::Less {
                    *slot = (record, code);
                }
            }
            None => {
                best.insert(code.token_hash, (record, code));
            }
        }
    }

    let mut distinct = Vec::with_capacity(best.len());
    let mut groups = BTreeMap::new();
    for (hash, (record, code)) in best {
        let mut ids = members.remove(&hash).unwrap_or_default();
        ids.sort();
        groups.insert(
            hash,
            DuplicateGroup {
                token_hash: hash,
                representative: record.id,
                members: ids,
            },
        );
        distinct.push(DistinctContract {
            record: record.clone(),
            code,
        });
    }
    distinct.sort_by_key(|a| a.record.id);
    Ok(Dedup {
        distinct,
        groups,
        distinct_runtime_count: runtime_hashes.len(),
    })
}
