//! Vulnerability provenance across similar contract pairs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::address::Address;
use crate::report;
use crate::similarity::SimilarityPair;

/// The vulnerability classes reported by the external scanner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnType {
    Reentrancy,
    Overflow,
    CrossFunctionRaceCondition,
    MismatchedConstructor,
    OwnershipTakeover,
    ManipulableSuicideAddress,
    Erc20,
}

impl VulnType {
    pub const ALL: [VulnType; 7] = [
        VulnType::Reentrancy,
        VulnType::Overflow,
        VulnType::CrossFunctionRaceCondition,
        VulnType::MismatchedConstructor,
        VulnType::OwnershipTakeover,
        VulnType::ManipulableSuicideAddress,
        VulnType::Erc20,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VulnType::Reentrancy => "reentrancy",
            VulnType::Overflow => "overflow",
            VulnType::CrossFunctionRaceCondition => "cross_function_race_condition",
            VulnType::MismatchedConstructor => "mismatched_constructor",
            VulnType::OwnershipTakeover => "ownership_takeover",
            VulnType::ManipulableSuicideAddress => "manipulable_suicide_address",
            VulnType::Erc20 => "erc20",
        }
    }
}

impl fmt::Display for VulnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VulnType {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VulnType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| AnalyticsError::UnknownVulnType(s.to_string()))
    }
}

/// Scanner findings for one contract: vulnerability type to count. Types with
/// a zero count are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VulnProfile {
    findings: BTreeMap<VulnType, u32>,
}

impl VulnProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, ty: VulnType, count: u32) {
        if count > 0 {
            *self.findings.entry(ty).or_insert(0) += count;
        }
    }

    pub fn with(mut self, ty: VulnType, count: u32) -> Self {
        self.add(ty, count);
        self
    }

    pub fn count(&self, ty: VulnType) -> u32 {
        self.findings.get(&ty).copied().unwrap_or(0)
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn types(&self) -> impl Iterator<Item = VulnType> + '_ {
        self.findings.keys().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorRelation {
    SameAuthor,
    DifferentAuthor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    NeitherVulnerable,
    BothSameBehavior,
    OneVulnerable,
    BothOverlapped,
    BothNotOverlapped,
}

impl Behavior {
    pub const ALL: [Behavior; 5] = [
        Behavior::NeitherVulnerable,
        Behavior::BothSameBehavior,
        Behavior::OneVulnerable,
        Behavior::BothOverlapped,
        Behavior::BothNotOverlapped,
    ];

    fn column(self) -> usize {
        self as usize
    }
}

/// Compares two finding multisets. Symmetric in its arguments.
pub fn classify(v1: &VulnProfile, v2: &VulnProfile) -> Behavior {
    match (v1.is_clean(), v2.is_clean()) {
        (true, true) => Behavior::NeitherVulnerable,
        (true, false) | (false, true) => Behavior::OneVulnerable,
        (false, false) if v1 == v2 => Behavior::BothSameBehavior,
        (false, false) => {
            if v1.types().any(|t| v2.count(t) > 0) {
                Behavior::BothOverlapped
            } else {
                Behavior::BothNotOverlapped
            }
        }
    }
}

pub fn classify_pair(
    pair: &SimilarityPair,
    profiles: &HashMap<Address, VulnProfile>,
    authors: &HashMap<Address, Address>,
) -> Result<(AuthorRelation, Behavior), AnalyticsError> {
    let profile = |id: &Address| profiles.get(id).ok_or(AnalyticsError::MissingProfile(*id));
    let author = |id: &Address| authors.get(id).ok_or(AnalyticsError::MissingAuthor(*id));
    let behavior = classify(profile(&pair.a)?, profile(&pair.b)?);
    let relation = if author(&pair.a)? == author(&pair.b)? {
        AuthorRelation::SameAuthor
    } else {
        AuthorRelation::DifferentAuthor
    };
    Ok((relation, behavior))
}

/// Pair counts by author relation (rows) and behavior (columns).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProvenanceTable {
    pub same_author: [u64; 5],
    pub different_author: [u64; 5],
}

impl ProvenanceTable {
    pub fn add(&mut self, relation: AuthorRelation, behavior: Behavior, n: u64) {
        let row = match relation {
            AuthorRelation::SameAuthor => &mut self.same_author,
            AuthorRelation::DifferentAuthor => &mut self.different_author,
        };
        row[behavior.column()] += n;
    }

    pub fn cell(&self, relation: AuthorRelation, behavior: Behavior) -> u64 {
        match relation {
            AuthorRelation::SameAuthor => self.same_author[behavior.column()],
            AuthorRelation::DifferentAuthor => self.different_author[behavior.column()],
        }
    }

    pub fn totals(&self) -> [u64; 5] {
        std::array::from_fn(|i| self.same_author[i] + self.different_author[i])
    }

    pub fn total(&self) -> u64 {
        self.totals().iter().sum()
    }

    /// Share of pairs in which both contracts show exactly the same non-empty
    /// findings, in percent.
    pub fn same_vulnerability_percent(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.totals()[Behavior::BothSameBehavior.column()] as f64 * 100.0 / total as f64)
    }

    pub fn render(&self) -> String {
        let row = |name: &str, cells: &[u64; 5]| {
            let mut r = vec![name.to_string()];
            r.extend(cells.iter().map(|&c| report::count(c)));
            r
        };
        let rows = vec![
            row("Same author", &self.same_author),
            row("Different author", &self.different_author),
            row("Total", &self.totals()),
        ];
        let mut out = report::text_table(
            &[
                "",
                "Neither vulnerable",
                "Both vulnerable (same)",
                "One vulnerable",
                "Both vulnerable, overlapped",
                "Both vulnerable, not overlapped",
            ],
            &rows,
        );
        if let Some(pct) = self.same_vulnerability_percent() {
            out.push_str(&format!(
                "\nPairs with exactly the same vulnerabilities: {} of {} ({:.2}%)\n",
                report::count(self.totals()[Behavior::BothSameBehavior.column()]),
                report::count(self.total()),
                pct
            ));
        }
        out
    }
}

pub fn provenance_table(
    pairs: &[SimilarityPair],
    profiles: &HashMap<Address, VulnProfile>,
    authors: &HashMap<Address, Address>,
) -> Result<ProvenanceTable, AnalyticsError> {
    let mut table = ProvenanceTable::default();
    for p in pairs {
        let (rel, beh) = classify_pair(p, profiles, authors)?;
        table.add(rel, beh, 1);
    }
    Ok(table)
}
