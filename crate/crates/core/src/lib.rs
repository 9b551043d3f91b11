//! Bytecode-level clone detection for Ethereum smart contracts.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`evm`] decodes bytecode, strips creation and Swarm code, drops PUSH
//!    immediates and groups exact duplicates by token hash.
//! 2. [`fingerprint`] cuts the opcode stream at block-ending opcodes and
//!    hashes each piece to one base-64 character.
//! 3. [`similarity`] scores fingerprint pairs by normalized edit distance and
//!    runs the pruned all-pairs comparison.
//! 4. [`cluster`] turns similar pairs into connected-component clusters.
//! 5. [`dappmatch`] compares multi-contract DApps by bipartite matching and
//!    reports clone clusters with their market volume.
//! 6. [`analytics`] produces duplicate statistics, cluster concentration and
//!    vulnerability provenance tables.
//!
//! [`corpus`] handles the file formats and node RPC retrieval.

pub mod address;
pub mod analytics;
pub mod cluster;
pub mod corpus;
pub mod dappmatch;
pub mod evm;
pub mod fingerprint;
pub mod report;
pub mod similarity;
pub mod synth;
pub mod union_find;

pub use address::{Address, Digest};
pub use fingerprint::Fingerprint;
