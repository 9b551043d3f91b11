//! Detection and removal of the compiler's Swarm metadata trailer
//! (`a1 65 'bzzr0' 58 ... 00 29`).

/// `LOG1 PUSH6 "bzzr0X"`, the fixed start of a Swarm trailer.
pub const SWARM_PREFIX: [u8; 8] = [0xa1, 0x65, 0x62, 0x7a, 0x7a, 0x72, 0x30, 0x58];
pub const SWARM_SUFFIX: [u8; 2] = [0x00, 0x29];

/// Bytes from the start of the prefix up to (not including) the suffix for
/// the classic solc trailer.
pub const STANDARD_SPAN: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwarmTail {
    /// Offset of the first prefix byte.
    pub start: usize,
    /// Total tail length including prefix and suffix.
    pub len: usize,
}

impl SwarmTail {
    pub fn has_standard_span(&self) -> bool {
        self.len == STANDARD_SPAN + SWARM_SUFFIX.len()
    }
}

/// The trailing Swarm tail of `code`, if the code ends with one.
pub fn find_tail(code: &[u8]) -> Option<SwarmTail> {
    if !code.ends_with(&SWARM_SUFFIX) {
        return None;
    }
    let body = &code[..code.len() - SWARM_SUFFIX.len()];
    let start = body
        .windows(SWARM_PREFIX.len())
        .rposition(|w| w == SWARM_PREFIX)?;
    Some(SwarmTail {
        start,
        len: code.len() - start,
    })
}

/// All trailing Swarm tails, outermost first. Stacked tails occur when the
/// runtime embeds another contract's full bytecode at its end.
pub fn tails(code: &[u8]) -> Vec<SwarmTail> {
    let mut out = Vec::new();
    let mut rest = code;
    while let Some(tail) = find_tail(rest) {
        out.push(tail);
        rest = &rest[..tail.start];
    }
    out
}

/// Removes trailing Swarm tails until none remains. Idempotent.
pub fn strip_swarm(code: &[u8]) -> &[u8] {
    let end = tails(code).last().map_or(code.len(), |t| t.start);
    &code[..end]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tail(hash_byte: u8) -> Vec<u8> {
        let mut t = SWARM_PREFIX.to_vec();
        t.push(0x20);
        t.extend(std::iter::repeat_n(hash_byte, 32));
        t.extend_from_slice(&SWARM_SUFFIX);
        t
    }

    #[test]
    fn removes_standard_tail() {
        let runtime = hex::decode("6080604052600080fd00").unwrap();
        let code = [runtime.clone(), tail(0xab)].concat();
        let found = find_tail(&code).unwrap();
        assert_eq!(found.start, runtime.len());
        assert!(found.has_standard_span());
        assert_eq!(strip_swarm(&code), &runtime[..]);
    }

    #[test]
    fn no_marker_unchanged() {
        let code = hex::decode("6001600101").unwrap();
        assert_eq!(strip_swarm(&code), &code[..]);
        // suffix without prefix
        let code = hex::decode("60010029").unwrap();
        assert_eq!(strip_swarm(&code), &code[..]);
        // prefix without suffix at end
        let mut code = [vec![0x01], tail(0x11)].concat();
        code.push(0x00);
        assert_eq!(strip_swarm(&code), &code[..]);
    }

    #[test]
    fn hash_bytes_do_not_matter() {
        let runtime = hex::decode("600160010100").unwrap();
        let a = [runtime.clone(), tail(0x01)].concat();
        let b = [runtime.clone(), tail(0xfe)].concat();
        assert_eq!(strip_swarm(&a), strip_swarm(&b));
    }

    #[test]
    fn nonstandard_span_is_stripped_and_flagged() {
        let runtime = vec![0x00];
        let mut t = SWARM_PREFIX.to_vec();
        t.extend([0x11; 5]);
        t.extend_from_slice(&SWARM_SUFFIX);
        let code = [runtime.clone(), t].concat();
        let found = find_tail(&code).unwrap();
        assert!(!found.has_standard_span());
        assert_eq!(strip_swarm(&code), &runtime[..]);
    }

    #[test]
    fn stacked_tails_and_idempotence() {
        let code = [vec![0x60, 0x01], tail(0x01), vec![0x56], tail(0x02)].concat();
        let once = strip_swarm(&code);
        assert_eq!(once, [vec![0x60, 0x01], tail(0x01), vec![0x56]].concat().as_slice());
        assert_eq!(strip_swarm(once), once);

        let nested = [vec![0x60, 0x01], tail(0x01), tail(0x02)].concat();
        assert_eq!(tails(&nested).len(), 2);
        assert_eq!(strip_swarm(&nested), &[0x60, 0x01]);
    }
}
