//! Corpus-level reports: duplicate statistics, cluster concentration, and
//! vulnerability provenance over similar pairs.

mod provenance;
mod stats;

use thiserror::Error;

use crate::address::Address;

pub use provenance::{
    classify, classify_pair, provenance_table, AuthorRelation, Behavior, ProvenanceTable, VulnProfile, VulnType,
};
pub use stats::{duplicate_stats, pareto_report, DuplicateRow, DuplicateStats, ParetoReport, TopShare};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("no vulnerability profile for contract {0}")]
    MissingProfile(Address),
    #[error("no deployer known for contract {0}")]
    MissingAuthor(Address),
    #[error("unknown vulnerability type `{0}`")]
    UnknownVulnType(String),
    #[error("no clusters to report on")]
    EmptyInput,
}
