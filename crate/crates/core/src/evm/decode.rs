use std::fmt;

use super::opcode::{Opcode, PUSH1, RETURN, STOP};
use super::EvmError;

/// One decoded instruction. `immediate` always holds exactly
/// `opcode.immediate_len()` bytes; a PUSH running past the end of the code is
/// zero-padded and marked `truncated`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: Opcode,
    pub immediate: Vec<u8>,
    pub truncated: bool,
}

impl Instruction {
    /// Offset of the following instruction.
    pub fn next_offset(&self) -> usize {
        self.offset + 1 + self.immediate.len()
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04x}: {}", self.offset, self.opcode)?;
        if !self.immediate.is_empty() {
            write!(f, " 0x{}", hex::encode(&self.immediate))?;
        }
        if self.truncated {
            f.write_str(" (truncated)")?;
        }
        Ok(())
    }
}

/// Iterator over the instructions of a byte slice. Never fails; use
/// [`decode`] for the checked, collected form.
pub struct Instructions<'a> {
    code: &'a [u8],
    pos: usize,
}

impl<'a> Instructions<'a> {
    pub fn new(code: &'a [u8]) -> Self {
        Instructions { code, pos: 0 }
    }
}

impl Iterator for Instructions<'_> {
    type Item = Instruction;

    fn next(&mut self) -> Option<Instruction> {
        let byte = *self.code.get(self.pos)?;
        let opcode = Opcode::from_byte(byte);
        let offset = self.pos;
        let start = offset + 1;
        let want = opcode.immediate_len();
        let end = (start + want).min(self.code.len());
        let mut immediate = self.code[start..end].to_vec();
        let truncated = immediate.len() < want;
        immediate.resize(want, 0);
        self.pos = end;
        Some(Instruction {
            offset,
            opcode,
            immediate,
            truncated,
        })
    }
}

pub fn decode(bytecode: &[u8]) -> Result<Vec<Instruction>, EvmError> {
    if bytecode.is_empty() {
        return Err(EvmError::EmptyBytecode);
    }
    Ok(Instructions::new(bytecode).collect())
}

/// Re-encodes an instruction stream. Reproduces the decoder input exactly
/// unless the last PUSH was truncated, in which case the padding is emitted.
pub fn encode(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(instructions.iter().map(|i| 1 + i.immediate.len()).sum());
    for ins in instructions {
        out.push(ins.opcode.byte_value());
        out.extend_from_slice(&ins.immediate);
    }
    out
}

/// Splits deployment bytecode after the first `PUSH1 0x00; RETURN; STOP`
/// sequence that lies on instruction boundaries. Returns `(creation, runtime)`;
/// when no such sequence exists the creation part is empty.
pub fn split_creation(full: &[u8]) -> (&[u8], &[u8]) {
    match creation_end(full) {
        Some(end) => full.split_at(end),
        None => (&full[..0], full),
    }
}

/// Byte offset just past the creation-code terminator, if one exists.
pub fn creation_end(full: &[u8]) -> Option<usize> {
    let mut window: [Option<Instruction>; 3] = [None, None, None];
    for ins in Instructions::new(full) {
        window.rotate_left(1);
        window[2] = Some(ins);
        if let [Some(push), Some(ret), Some(stop)] = &window {
            if push.opcode.byte_value() == PUSH1
                && !push.truncated
                && push.immediate == [0x00]
                && ret.opcode.byte_value() == RETURN
                && stop.opcode.byte_value() == STOP
            {
                return Some(stop.next_offset());
            }
        }
    }
    None
}
