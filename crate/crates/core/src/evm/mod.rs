//! Bytecode decoding and pre-processing.
//!
//! Raw deployment or runtime bytecode goes through three steps before it is
//! compared: the creation stub is split off, the Swarm metadata trailer is
//! stripped, and PUSH immediates are dropped so only the opcode sequence
//! remains. Contracts that agree after these steps are duplicates.

pub mod decode;
pub mod dedup;
pub mod opcode;
pub mod swarm;
pub mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Address;

pub use decode::{creation_end, decode, encode, split_creation, Instruction, Instructions};
pub use dedup::{dedup, Dedup, DistinctContract, DuplicateGroup};
pub use opcode::Opcode;
pub use swarm::{strip_swarm, SwarmTail};
pub use tokenize::{tokenize, TokenizedCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvmError {
    #[error("empty bytecode")]
    EmptyBytecode,
    #[error("no creation-code terminator (PUSH1 0x00 RETURN STOP) found")]
    NoCreationCode,
    #[error("contract {id}: {source}")]
    Record {
        id: Address,
        #[source]
        source: Box<EvmError>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreationKind {
    #[serde(alias = "user")]
    UserCreated,
    #[serde(alias = "contract")]
    ContractCreated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractRecord {
    pub id: Address,
    pub deployer: Address,
    pub creation_kind: CreationKind,
    pub bytecode: Vec<u8>,
    /// Unix seconds.
    pub deployed_at: Option<u64>,
}

/// How to interpret a bytecode blob.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputKind {
    /// Split off a creation stub if one is found.
    #[default]
    Auto,
    /// Already runtime code.
    Runtime,
    /// Deployment code; the creation terminator must be present.
    Creation,
}

impl FromStr for InputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(InputKind::Auto),
            "runtime" => Ok(InputKind::Runtime),
            "creation" => Ok(InputKind::Creation),
            other => Err(format!("unknown input kind `{other}` (expected auto, runtime or creation)")),
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputKind::Auto => "auto",
            InputKind::Runtime => "runtime",
            InputKind::Creation => "creation",
        })
    }
}

/// Extracts the Swarm-free runtime code from a bytecode blob.
pub fn runtime_code(bytecode: &[u8], kind: InputKind) -> Result<&[u8], EvmError> {
    if bytecode.is_empty() {
        return Err(EvmError::EmptyBytecode);
    }
    let runtime = match kind {
        InputKind::Runtime => bytecode,
        InputKind::Auto => split_creation(bytecode).1,
        InputKind::Creation => match creation_end(bytecode) {
            Some(end) => &bytecode[end..],
            None => return Err(EvmError::NoCreationCode),
        },
    };
    Ok(strip_swarm(runtime))
}

/// `runtime_code` followed by [`tokenize`].
pub fn preprocess(bytecode: &[u8], kind: InputKind) -> Result<TokenizedCode, EvmError> {
    tokenize(runtime_code(bytecode, kind)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn creation_kind_requires_split() {
        let code = hex::decode("6001600101").unwrap();
        assert_eq!(runtime_code(&code, InputKind::Creation), Err(EvmError::NoCreationCode));
        assert_eq!(runtime_code(&code, InputKind::Auto).unwrap(), &code[..]);
    }

    #[test]
    fn runtime_kind_skips_split() {
        let code = hex::decode("6000f30001").unwrap();
        assert_eq!(runtime_code(&code, InputKind::Runtime).unwrap(), &code[..]);
        assert_eq!(runtime_code(&code, InputKind::Auto).unwrap(), &[0x01]);
    }

    #[test]
    fn stub_only_has_empty_runtime() {
        let code = hex::decode("6000f300").unwrap();
        assert_eq!(preprocess(&code, InputKind::Auto), Err(EvmError::EmptyBytecode));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("creation".parse::<InputKind>().unwrap(), InputKind::Creation);
        assert!("bogus".parse::<InputKind>().is_err());
    }
}
