//! Piece-wise fuzzy fingerprints of tokenized runtime code.
//!
//! The opcode stream is cut after every trigger opcode (the instructions that
//! end a basic block in the compiler's output: JUMP, JUMPI, REVERT, STOP,
//! RETURN). Each piece is hashed with 32-bit FNV-1a and reduced modulo 64 to
//! one character of the standard base-64 alphabet. Editing one block of a
//! contract therefore changes one character of its fingerprint and leaves the
//! rest alone, which is what makes edit distance a usable similarity measure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::evm::opcode::{JUMP, JUMPI, RETURN, REVERT, STOP};
use crate::evm::{EvmError, TokenizedCode};

/// Bumped whenever the piece hash, alphabet or trigger set changes.
pub const FORMAT_VERSION: u32 = 1;

pub const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

const FNV_OFFSET: u32 = 0x811c_9dc5;
const FNV_PRIME: u32 = 0x0100_0193;

/// Opcodes that terminate a piece.
#[derive(Clone, PartialEq, Eq)]
pub struct TriggerSet {
    table: [bool; 256],
}

impl TriggerSet {
    pub fn new<I: IntoIterator<Item = u8>>(opcodes: I) -> Self {
        let mut table = [false; 256];
        for op in opcodes {
            table[op as usize] = true;
        }
        TriggerSet { table }
    }

    pub fn contains(&self, opcode: u8) -> bool {
        self.table[opcode as usize]
    }

    pub fn opcodes(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(|&b| self.contains(b))
    }

    /// Number of pieces `cut` would return, without allocating.
    pub fn count_pieces(&self, opcode_bytes: &[u8]) -> usize {
        if opcode_bytes.is_empty() {
            return 0;
        }
        let triggers = opcode_bytes.iter().filter(|&&b| self.contains(b)).count();
        let trailing = self.contains(opcode_bytes[opcode_bytes.len() - 1]);
        triggers + usize::from(!trailing)
    }

    /// Splits after each trigger opcode. Residue after the last trigger forms
    /// a final piece.
    pub fn cut<'a>(&self, opcode_bytes: &'a [u8]) -> Vec<&'a [u8]> {
        opcode_bytes
            .split_inclusive(|&b| self.contains(b))
            .collect()
    }
}

impl Default for TriggerSet {
    fn default() -> Self {
        TriggerSet::new([JUMP, JUMPI, REVERT, STOP, RETURN])
    }
}

impl fmt::Debug for TriggerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.opcodes()).finish()
    }
}

pub fn cut_pieces<'a>(tokenized: &'a TokenizedCode, triggers: &TriggerSet) -> Vec<&'a [u8]> {
    triggers.cut(&tokenized.opcode_bytes)
}

pub fn fnv1a32(bytes: &[u8]) -> u32 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u32::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn piece_char(piece: &[u8]) -> char {
    ALPHABET[(fnv1a32(piece) % 64) as usize] as char
}

/// A fingerprint: one base-64 character per piece.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(String);

impl Fingerprint {
    /// Wraps an existing fingerprint string. Returns `None` if it contains a
    /// character outside the alphabet.
    pub fn parse(s: &str) -> Option<Self> {
        s.bytes()
            .all(|b| ALPHABET.contains(&b))
            .then(|| Fingerprint(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn piece_count(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn fingerprint_with(tokenized: &TokenizedCode, triggers: &TriggerSet) -> Result<Fingerprint, EvmError> {
    if tokenized.opcode_bytes.is_empty() {
        return Err(EvmError::EmptyBytecode);
    }
    Ok(Fingerprint(
        cut_pieces(tokenized, triggers).into_iter().map(piece_char).collect(),
    ))
}

/// Fingerprint under the default trigger set.
pub fn generate_fp(tokenized: &TokenizedCode) -> Result<Fingerprint, EvmError> {
    fingerprint_with(tokenized, &TriggerSet::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::opcode::{ADD, MUL, PUSH1};
    use crate::evm::tokenize;

    fn tok(h: &str) -> TokenizedCode {
        tokenize(&hex::decode(h).unwrap()).unwrap()
    }

    #[test]
    fn default_triggers_are_exactly_five() {
        let t = TriggerSet::default();
        assert_eq!(t.opcodes().collect::<Vec<_>>(), vec![STOP, JUMP, JUMPI, RETURN, REVERT]);
        assert!(!t.contains(crate::evm::opcode::JUMPDEST));
    }

    #[test]
    fn cut_single_piece() {
        let t = TriggerSet::default();
        let ops = [PUSH1, PUSH1, ADD, STOP];
        assert_eq!(t.cut(&ops), vec![&ops[..]]);
    }

    #[test]
    fn cut_two_pieces() {
        let t = TriggerSet::default();
        let ops = [PUSH1, JUMP, PUSH1, RETURN];
        assert_eq!(t.cut(&ops), vec![&[PUSH1, JUMP][..], &[PUSH1, RETURN][..]]);
    }

    #[test]
    fn cut_trailing_residue() {
        let t = TriggerSet::default();
        let ops = [ADD, MUL];
        assert_eq!(t.cut(&ops), vec![&ops[..]]);
        assert_eq!(t.count_pieces(&ops), 1);
    }

    #[test]
    fn count_matches_cut() {
        let t = TriggerSet::default();
        for ops in [&[STOP][..], &[STOP, STOP], &[ADD, STOP, ADD], &[JUMP, ADD, JUMPI, RETURN]] {
            assert_eq!(t.count_pieces(ops), t.cut(ops).len(), "{ops:?}");
        }
    }

    // Frozen from an independent FNV-1a implementation:
    // fnv1a32([00]) = 0x050c5d1f, mod 64 = 31 -> 'f'
    // fnv1a32([60 60 01 00]) = 0xfce201ec, mod 64 = 44 -> 's'
    // fnv1a32([60 56]) = 0x7b278ccb -> 'L'; fnv1a32([60 f3]) = 0xde2695a4 -> 'k'
    #[test]
    fn piece_chars_frozen() {
        assert_eq!(fnv1a32(&[0x00]), 0x050c_5d1f);
        assert_eq!(piece_char(&[0x00]), 'f');
        assert_eq!(fnv1a32(&[0x60, 0x60, 0x01, 0x00]), 0xfce2_01ec);
        assert_eq!(piece_char(&[0x60, 0x60, 0x01, 0x00]), 's');
        assert_eq!(piece_char(&[0x60, 0x56]), 'L');
        assert_eq!(piece_char(&[0x60, 0xf3]), 'k');
        assert_eq!(piece_char(&[0x01, 0x02]), 'K');
    }

    #[test]
    fn generate_concatenates_piece_chars() {
        // fnv1a32([60 60 01]) mod 64 -> 'k'
        assert_eq!(generate_fp(&tok("6001600101")).unwrap().as_str(), "k");
        assert_eq!(generate_fp(&tok("600156600af3")).unwrap().as_str(), "Lk");
        assert_eq!(generate_fp(&tok("00")).unwrap().as_str(), "f");
    }

    #[test]
    fn immediates_do_not_matter() {
        assert_eq!(generate_fp(&tok("600156600af3")), generate_fp(&tok("60ff5660eef3")));
    }

    #[test]
    fn piece_count_matches_block_count() {
        let t = tok("6001566002576003fd00600af3");
        assert_eq!(generate_fp(&t).unwrap().piece_count(), t.block_count);
    }

    #[test]
    fn parse_rejects_foreign_chars() {
        assert!(Fingerprint::parse("Ab+/09").is_some());
        assert!(Fingerprint::parse("Ab-").is_none());
    }
}
