use sha2::{Digest as _, Sha256};

use super::decode::Instructions;
use super::EvmError;
use crate::address::Digest;
use crate::fingerprint::TriggerSet;

/// Runtime code reduced to its opcode sequence, with the digests and counts
/// used for deduplication and pruning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedCode {
    /// One byte per instruction; PUSH immediates removed.
    pub opcode_bytes: Vec<u8>,
    pub opcode_count: usize,
    /// Pieces under the default trigger set.
    pub block_count: usize,
    pub runtime_len: usize,
    pub runtime_hash: Digest,
    pub token_hash: Digest,
    /// The final PUSH ran past the end of the code.
    pub truncated_push: bool,
}

pub(crate) fn sha256(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

pub fn tokenize(runtime: &[u8]) -> Result<TokenizedCode, EvmError> {
    if runtime.is_empty() {
        return Err(EvmError::EmptyBytecode);
    }
    let mut opcode_bytes = Vec::with_capacity(runtime.len());
    let mut truncated_push = false;
    for ins in Instructions::new(runtime) {
        opcode_bytes.push(ins.opcode.byte_value());
        truncated_push |= ins.truncated;
    }
    let block_count = TriggerSet::default().count_pieces(&opcode_bytes);
    Ok(TokenizedCode {
        opcode_count: opcode_bytes.len(),
        block_count,
        runtime_len: runtime.len(),
        runtime_hash: sha256(runtime),
        token_hash: sha256(&opcode_bytes),
        opcode_bytes,
        truncated_push,
    })
}
