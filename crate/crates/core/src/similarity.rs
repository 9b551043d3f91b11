//! Fingerprint scoring and the pruned all-pairs comparison.

use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Address;
use crate::evm::TokenizedCode;
use crate::fingerprint::Fingerprint;

/// Default similarity threshold.
pub const DEFAULT_THRESHOLD: f64 = 70.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("cannot score two empty fingerprints")]
    DegeneratePair,
    #[error("threshold {0} outside [0, 100]")]
    Threshold(String),
}

/// Unit-cost Levenshtein distance. Keeps two rows sized to the shorter input.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (i, &lc) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let substitute = prev[j] + usize::from(lc != sc);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

pub fn edit_distance(fp1: &Fingerprint, fp2: &Fingerprint) -> usize {
    levenshtein(fp1.as_bytes(), fp2.as_bytes())
}

/// `(1 - distance / max_len) * 100`, evaluated as
/// `100 * (max_len - distance) / max_len` so integral results are exact.
pub fn score_from_distance(distance: usize, max_len: usize) -> f64 {
    debug_assert!(distance <= max_len && max_len > 0);
    (100 * (max_len - distance)) as f64 / max_len as f64
}

pub fn similarity_score(fp1: &Fingerprint, fp2: &Fingerprint) -> Result<f64, SimilarityError> {
    let max_len = fp1.piece_count().max(fp2.piece_count());
    if max_len == 0 {
        return Err(SimilarityError::DegeneratePair);
    }
    Ok(score_from_distance(edit_distance(fp1, fp2), max_len))
}

/// Renders a score the way reports print it: one decimal.
pub fn format_score(score: f64) -> String {
    format!("{score:.1}")
}

pub fn check_threshold(threshold: f64) -> Result<f64, SimilarityError> {
    if (0.0..=100.0).contains(&threshold) {
        Ok(threshold)
    } else {
        Err(SimilarityError::Threshold(threshold.to_string()))
    }
}

/// Cheap per-contract attributes used to skip obviously dissimilar pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetaAttributes {
    pub opcode_count: usize,
    pub block_count: usize,
    pub runtime_byte_len: usize,
}

impl MetaAttributes {
    pub fn of(code: &TokenizedCode) -> Self {
        MetaAttributes {
            opcode_count: code.opcode_count,
            block_count: code.block_count,
            runtime_byte_len: code.runtime_len,
        }
    }

    fn values(&self) -> [usize; 3] {
        [self.opcode_count, self.block_count, self.runtime_byte_len]
    }
}

/// An attribute differs when `|x - y| / max(x, y) > 0.30`.
fn attribute_differs(x: usize, y: usize) -> bool {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    // integer form of (hi - lo) / hi > 3 / 10
    10 * (hi - lo) as u128 > 3 * hi as u128
}

/// True when the pair should be compared. Skips only when a majority of the
/// attributes differ (two of three).
pub fn prune_filter(m1: &MetaAttributes, m2: &MetaAttributes) -> bool {
    let (a, b) = (m1.values(), m2.values());
    let differing = a.iter().zip(&b).filter(|(x, y)| attribute_differs(**x, **y)).count();
    differing * 2 <= a.len()
}

/// A scored, unordered contract pair. `a < b` always holds.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub a: Address,
    pub b: Address,
    pub score: f64,
    pub distance: usize,
    pub max_len: usize,
}

impl SimilarityPair {
    pub fn new(x: Address, y: Address, distance: usize, max_len: usize) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        SimilarityPair {
            a,
            b,
            score: score_from_distance(distance, max_len),
            distance,
            max_len,
        }
    }

    /// A pair known only by its score (e.g. read from a report without the
    /// distance columns).
    pub fn with_score(x: Address, y: Address, score: f64) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        SimilarityPair {
            a,
            b,
            score,
            distance: 0,
            max_len: 0,
        }
    }
}

impl fmt::Display for SimilarityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, format_score(self.score))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareEntry {
    pub id: Address,
    pub meta: MetaAttributes,
    pub fingerprint: Fingerprint,
}

/// Counters from a comparison run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompareStats {
    pub candidate_pairs: u64,
    pub pruned: u64,
    pub scored: u64,
    pub kept: u64,
}

impl std::ops::AddAssign for CompareStats {
    fn add_assign(&mut self, o: Self) {
        self.candidate_pairs += o.candidate_pairs;
        self.pruned += o.pruned;
        self.scored += o.scored;
        self.kept += o.kept;
    }
}

fn compare_rows(
    entries: &[CompareEntry],
    rows: impl Iterator<Item = usize>,
    threshold: f64,
) -> (Vec<SimilarityPair>, CompareStats) {
    let mut out = Vec::new();
    let mut stats = CompareStats::default();
    for i in rows {
        let x = &entries[i];
        for y in &entries[i + 1..] {
            stats.candidate_pairs += 1;
            if x.id == y.id {
                continue;
            }
            if !prune_filter(&x.meta, &y.meta) {
                stats.pruned += 1;
                continue;
            }
            let max_len = x.fingerprint.piece_count().max(y.fingerprint.piece_count());
            if max_len == 0 {
                continue;
            }
            stats.scored += 1;
            let distance = edit_distance(&x.fingerprint, &y.fingerprint);
            let pair = SimilarityPair::new(x.id, y.id, distance, max_len);
            if pair.score >= threshold {
                stats.kept += 1;
                out.push(pair);
            }
        }
    }
    (out, stats)
}

fn sort_pairs(pairs: &mut [SimilarityPair]) {
    pairs.sort_by_key(|p| (p.a, p.b));
}

/// Scores every unordered pair that survives [`prune_filter`] and keeps those
/// with `score >= threshold`. Rows of the pair triangle are dealt round-robin
/// to `workers` threads; the merged output is sorted by `(a, b)`.
pub fn pairwise_compare_with_stats(
    entries: &[CompareEntry],
    threshold: f64,
    workers: usize,
) -> (Vec<SimilarityPair>, CompareStats) {
    let workers = workers.max(1).min(entries.len().max(1));
    let (mut pairs, stats) = if workers == 1 {
        compare_rows(entries, 0..entries.len(), threshold)
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    s.spawn(move || {
                        compare_rows(entries, (w..entries.len()).step_by(workers), threshold)
                    })
                })
                .collect();
            let mut pairs = Vec::new();
            let mut stats = CompareStats::default();
            for h in handles {
                let (p, st) = h.join().expect("compare worker panicked");
                pairs.extend(p);
                stats += st;
            }
            (pairs, stats)
        })
    };
    sort_pairs(&mut pairs);
    (pairs, stats)
}

pub fn pairwise_compare(entries: &[CompareEntry], threshold: f64, workers: usize) -> Vec<SimilarityPair> {
    pairwise_compare_with_stats(entries, threshold, workers).0
}
