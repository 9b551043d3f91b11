//! EVM opcode table (Cancun).
//!
//! Unassigned byte values are reported with the `INVALID` mnemonic but keep
//! their own byte value, so distinct undefined bytes still tokenize apart.

use std::fmt;

pub const STOP: u8 = 0x00;
pub const ADD: u8 = 0x01;
pub const MUL: u8 = 0x02;
pub const ISZERO: u8 = 0x15;
pub const CALLER: u8 = 0x33;
pub const CALLVALUE: u8 = 0x34;
pub const CALLDATALOAD: u8 = 0x35;
pub const POP: u8 = 0x50;
pub const MLOAD: u8 = 0x51;
pub const MSTORE: u8 = 0x52;
pub const SLOAD: u8 = 0x54;
pub const SSTORE: u8 = 0x55;
pub const JUMP: u8 = 0x56;
pub const JUMPI: u8 = 0x57;
pub const JUMPDEST: u8 = 0x5b;
pub const PUSH0: u8 = 0x5f;
pub const PUSH1: u8 = 0x60;
pub const PUSH32: u8 = 0x7f;
pub const DUP1: u8 = 0x80;
pub const SWAP1: u8 = 0x90;
pub const LOG1: u8 = 0xa1;
pub const RETURN: u8 = 0xf3;
pub const REVERT: u8 = 0xfd;
pub const INVALID: u8 = 0xfe;
pub const SELFDESTRUCT: u8 = 0xff;

const UNDEFINED: &str = "INVALID";

#[rustfmt::skip]
const NAMES: [&str; 256] = [
    // 0x00
    "STOP","ADD","MUL","SUB","DIV","SDIV","MOD","SMOD","ADDMOD","MULMOD","EXP","SIGNEXTEND","","","","",
    // 0x10
    "LT","GT","SLT","SGT","EQ","ISZERO","AND","OR","XOR","NOT","BYTE","SHL","SHR","SAR","","",
    // 0x20
    "KECCAK256","","","","","","","","","","","","","","","",
    // 0x30
    "ADDRESS","BALANCE","ORIGIN","CALLER","CALLVALUE","CALLDATALOAD","CALLDATASIZE","CALLDATACOPY",
    "CODESIZE","CODECOPY","GASPRICE","EXTCODESIZE","EXTCODECOPY","RETURNDATASIZE","RETURNDATACOPY","EXTCODEHASH",
    // 0x40
    "BLOCKHASH","COINBASE","TIMESTAMP","NUMBER","PREVRANDAO","GASLIMIT","CHAINID","SELFBALANCE",
    "BASEFEE","BLOBHASH","BLOBBASEFEE","","","","","",
    // 0x50
    "POP","MLOAD","MSTORE","MSTORE8","SLOAD","SSTORE","JUMP","JUMPI",
    "PC","MSIZE","GAS","JUMPDEST","TLOAD","TSTORE","MCOPY","PUSH0",
    // 0x60
    "PUSH1","PUSH2","PUSH3","PUSH4","PUSH5","PUSH6","PUSH7","PUSH8",
    "PUSH9","PUSH10","PUSH11","PUSH12","PUSH13","PUSH14","PUSH15","PUSH16",
    // 0x70
    "PUSH17","PUSH18","PUSH19","PUSH20","PUSH21","PUSH22","PUSH23","PUSH24",
    "PUSH25","PUSH26","PUSH27","PUSH28","PUSH29","PUSH30","PUSH31","PUSH32",
    // 0x80
    "DUP1","DUP2","DUP3","DUP4","DUP5","DUP6","DUP7","DUP8",
    "DUP9","DUP10","DUP11","DUP12","DUP13","DUP14","DUP15","DUP16",
    // 0x90
    "SWAP1","SWAP2","SWAP3","SWAP4","SWAP5","SWAP6","SWAP7","SWAP8",
    "SWAP9","SWAP10","SWAP11","SWAP12","SWAP13","SWAP14","SWAP15","SWAP16",
    // 0xa0
    "LOG0","LOG1","LOG2","LOG3","LOG4","","","","","","","","","","","",
    // 0xb0
    "","","","","","","","","","","","","","","","",
    // 0xc0
    "","","","","","","","","","","","","","","","",
    // 0xd0
    "","","","","","","","","","","","","","","","",
    // 0xe0
    "","","","","","","","","","","","","","","","",
    // 0xf0
    "CREATE","CALL","CALLCODE","RETURN","DELEGATECALL","CREATE2","","",
    "","","STATICCALL","","","REVERT","INVALID","SELFDESTRUCT",
];

/// A single entry of the opcode table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Opcode {
    byte: u8,
}

impl Opcode {
    pub const fn from_byte(byte: u8) -> Self {
        Opcode { byte }
    }

    pub const fn byte_value(self) -> u8 {
        self.byte
    }

    pub fn mnemonic(self) -> &'static str {
        match NAMES[self.byte as usize] {
            "" => UNDEFINED,
            name => name,
        }
    }

    /// Number of inline data bytes following the opcode (PUSHn carries n).
    pub const fn immediate_len(self) -> usize {
        if self.byte >= PUSH1 && self.byte <= PUSH32 {
            (self.byte - PUSH1 + 1) as usize
        } else {
            0
        }
    }

    /// False for byte values with no assigned instruction. `0xfe` is the
    /// designated INVALID instruction and counts as defined.
    pub fn is_defined(self) -> bool {
        !NAMES[self.byte as usize].is_empty()
    }

    pub const fn is_push(self) -> bool {
        self.byte >= PUSH0 && self.byte <= PUSH32
    }
}

impl From<u8> for Opcode {
    fn from(byte: u8) -> Self {
        Opcode::from_byte(byte)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_defined() {
            f.write_str(self.mnemonic())
        } else {
            write!(f, "INVALID(0x{:02x})", self.byte)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_immediates() {
        assert_eq!(Opcode::from_byte(PUSH0).immediate_len(), 0);
        for n in 1..=32u8 {
            let op = Opcode::from_byte(PUSH1 + n - 1);
            assert_eq!(op.immediate_len(), n as usize);
            assert_eq!(op.mnemonic(), format!("PUSH{n}"));
        }
        for b in (0..=255u8).filter(|b| !(PUSH1..=PUSH32).contains(b)) {
            assert_eq!(Opcode::from_byte(b).immediate_len(), 0);
        }
    }

    #[test]
    fn undefined_bytes() {
        let op = Opcode::from_byte(0x0c);
        assert!(!op.is_defined());
        assert_eq!(op.mnemonic(), "INVALID");
        assert_eq!(op.byte_value(), 0x0c);
        assert_eq!(op.to_string(), "INVALID(0x0c)");
        assert!(Opcode::from_byte(INVALID).is_defined());
    }

    #[test]
    fn known_names() {
        assert_eq!(Opcode::from_byte(JUMPI).mnemonic(), "JUMPI");
        assert_eq!(Opcode::from_byte(RETURN).mnemonic(), "RETURN");
        assert_eq!(Opcode::from_byte(REVERT).mnemonic(), "REVERT");
        assert_eq!(Opcode::from_byte(SELFDESTRUCT).mnemonic(), "SELFDESTRUCT");
        assert_eq!(Opcode::from_byte(0x20).mnemonic(), "KECCAK256");
    }
}
