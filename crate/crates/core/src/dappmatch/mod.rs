//! DApp clone detection.
//!
//! A DApp is a named set of contracts. Two DApps are compared by matching
//! their contracts one-to-one (maximum-weight bipartite matching over pairwise
//! fingerprint scores) after dropping template contracts. The matched weight
//! divided by the size of one side gives a directional similarity; the larger
//! of the two directions is the DApp score. A pair scoring over the threshold
//! whose deployer sets are disjoint is a clone pair, and the earlier-deployed
//! DApp is taken as the original.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hungarian::{km_match, MatchResult, MatchedEdge};

use crate::address::{Address, Digest};
use crate::cluster::TemplateList;
use crate::fingerprint::Fingerprint;
use crate::report;
use crate::similarity::{prune_filter, similarity_score, MetaAttributes};
use crate::union_find::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("cannot match an empty weight matrix")]
    EmptyMatching,
    #[error("row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DAppError {
    #[error("DApp `{0}` consists only of template contracts")]
    TemplateOnly(String),
    #[error("DApp `{dapp}` references unknown contract {contract}")]
    UnknownContract { dapp: String, contract: Address },
    #[error("invalid DApp manifest `{name}`: {reason}")]
    InvalidManifest { name: String, reason: &'static str },
    #[error("duplicate DApp name `{0}`")]
    DuplicateName(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DAppManifest {
    pub name: String,
    pub contracts: Vec<Address>,
    pub deployers: BTreeSet<Address>,
    /// ETH.
    pub volume: f64,
    /// Unix seconds.
    pub deployed_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl DAppManifest {
    pub fn validate(&self) -> Result<(), DAppError> {
        let invalid = |reason| DAppError::InvalidManifest {
            name: self.name.clone(),
            reason,
        };
        if self.name.is_empty() {
            return Err(invalid("empty name"));
        }
        if self.contracts.is_empty() {
            return Err(invalid("no contracts"));
        }
        if self.deployers.is_empty() {
            return Err(invalid("no deployers"));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(invalid("volume must be a non-negative number"));
        }
        Ok(())
    }

    pub fn shares_deployer(&self, other: &DAppManifest) -> bool {
        !self.deployers.is_disjoint(&other.deployers)
    }
}

/// What the matcher needs to know about one contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractInfo {
    pub token_hash: Digest,
    pub meta: MetaAttributes,
    pub fingerprint: Fingerprint,
}

/// Contract lookup by address; duplicates resolve to their representative's
/// entry.
#[derive(Clone, Debug, Default)]
pub struct FingerprintStore {
    infos: Vec<ContractInfo>,
    index: HashMap<Address, usize>,
}

impl FingerprintStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: Address, info: ContractInfo) {
        self.index.insert(id, self.infos.len());
        self.infos.push(info);
    }

    /// Makes `id` resolve to the same entry as `representative`. Returns
    /// false if the representative is unknown.
    pub fn alias(&mut self, id: Address, representative: Address) -> bool {
        match self.index.get(&representative).copied() {
            Some(slot) => {
                self.index.insert(id, slot);
                true
            }
            None => false,
        }
    }

    pub fn get(&self, id: &Address) -> Option<&ContractInfo> {
        self.index.get(id).map(|&i| &self.infos[i])
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedDApp {
    pub contracts: Vec<Address>,
    pub template_only: bool,
}

/// Drops contracts whose token hash is a known template.
pub fn exclude_templates(
    dapp: &DAppManifest,
    templates: &TemplateList,
    store: &FingerprintStore,
) -> Result<ReducedDApp, DAppError> {
    let mut contracts = Vec::with_capacity(dapp.contracts.len());
    for id in &dapp.contracts {
        let info = store.get(id).ok_or_else(|| DAppError::UnknownContract {
            dapp: dapp.name.clone(),
            contract: *id,
        })?;
        if !templates.contains(&info.token_hash) {
            contracts.push(*id);
        }
    }
    Ok(ReducedDApp {
        template_only: contracts.is_empty(),
        contracts,
    })
}

/// Contract-pair weight: the fingerprint score, or 0 when the pair is pruned.
fn contract_weight(x: &ContractInfo, y: &ContractInfo) -> f64 {
    if !prune_filter(&x.meta, &y.meta) {
        return 0.0;
    }
    similarity_score(&x.fingerprint, &y.fingerprint).unwrap_or(0.0)
}

/// `(Sim(A->B), Sim(B->A))` over already-reduced contract lists.
pub fn directional_similarity(
    a: &[Address],
    b: &[Address],
    store: &FingerprintStore,
) -> Result<(f64, f64), DAppError> {
    let lookup = |id: &Address| {
        store.get(id).ok_or(DAppError::UnknownContract {
            dapp: String::new(),
            contract: *id,
        })
    };
    let left = a.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    let right = b.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    let weights: Vec<Vec<f64>> = left
        .iter()
        .map(|x| right.iter().map(|y| contract_weight(x, y)).collect())
        .collect();
    let matched = km_match(&weights)?;
    Ok((
        matched.total_weight / a.len() as f64,
        matched.total_weight / b.len() as f64,
    ))
}

pub fn dapp_similarity(
    d1: &DAppManifest,
    d2: &DAppManifest,
    store: &FingerprintStore,
    templates: &TemplateList,
) -> Result<f64, DAppError> {
    let r1 = exclude_templates(d1, templates, store)?;
    if r1.template_only {
        return Err(DAppError::TemplateOnly(d1.name.clone()));
    }
    let r2 = exclude_templates(d2, templates, store)?;
    if r2.template_only {
        return Err(DAppError::TemplateOnly(d2.name.clone()));
    }
    let (ab, ba) = directional_similarity(&r1.contracts, &r2.contracts, store)?;
    Ok(ab.max(ba))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DAppClonePair {
    pub original: String,
    pub clone: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DAppCloneCluster {
    pub original: String,
    /// Sorted by name.
    pub clones: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CloneReport {
    /// Sorted by `(original, clone)`.
    pub pairs: Vec<DAppClonePair>,
    /// Most clones first, then by original name.
    pub clusters: Vec<DAppCloneCluster>,
    /// DApps left empty by template exclusion, sorted.
    pub template_only: Vec<String>,
}

fn earlier<'a>(x: &'a DAppManifest, y: &'a DAppManifest) -> (&'a DAppManifest, &'a DAppManifest) {
    if (x.deployed_at, &x.name) <= (y.deployed_at, &y.name) {
        (x, y)
    } else {
        (y, x)
    }
}

pub fn detect_clones(
    dapps: &[DAppManifest],
    store: &FingerprintStore,
    templates: &TemplateList,
    threshold: f64,
) -> Result<CloneReport, DAppError> {
    let mut sorted: Vec<&DAppManifest> = dapps.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for w in sorted.windows(2) {
        if w[0].name == w[1].name {
            return Err(DAppError::DuplicateName(w[0].name.clone()));
        }
    }
    for d in &sorted {
        d.validate()?;
    }

    let mut report = CloneReport::default();
    let mut active: Vec<(&DAppManifest, Vec<Address>)> = Vec::new();
    for d in &sorted {
        let reduced = exclude_templates(d, templates, store)?;
        if reduced.template_only {
            report.template_only.push(d.name.clone());
        } else {
            active.push((d, reduced.contracts));
        }
    }

    let mut uf = UnionFind::new(active.len());
    let mut linked = vec![false; active.len()];
    for i in 0..active.len() {
        for j in i + 1..active.len() {
            let (di, ci) = &active[i];
            let (dj, cj) = &active[j];
            if di.shares_deployer(dj) {
                continue;
            }
            let (ab, ba) = directional_similarity(ci, cj, store)?;
            let score = ab.max(ba);
            if score >= threshold {
                let (orig, clone) = earlier(di, dj);
                report.pairs.push(DAppClonePair {
                    original: orig.name.clone(),
                    clone: clone.name.clone(),
                    score,
                });
                uf.union(i, j);
                linked[i] = true;
                linked[j] = true;
            }
        }
    }
    report
        .pairs
        .sort_by(|p, q| (&p.original, &p.clone).cmp(&(&q.original, &q.clone)));

    for group in uf.groups() {
        if !linked[group[0]] {
            continue;
        }
        let members: Vec<&DAppManifest> = group.iter().map(|&i| active[i].0).collect();
        let original = members
            .iter()
            .copied()
            .reduce(|x, y| earlier(x, y).0)
            .expect("non-empty group");
        let mut clones: Vec<String> = members
            .iter()
            .filter(|d| d.name != original.name)
            .map(|d| d.name.clone())
            .collect();
        clones.sort();
        report.clusters.push(DAppCloneCluster {
            original: original.name.clone(),
            clones,
        });
    }
    report.clusters.sort_by(|a, b| {
        b.clones
            .len()
            .cmp(&a.clones.len())
            .then_with(|| a.original.cmp(&b.original))
    });
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub original: String,
    pub clone_count: usize,
    pub original_volume: f64,
    pub plagiarized_volume: f64,
    /// `plagiarized / original`, absent when the original volume is zero.
    pub ratio: Option<f64>,
}

impl VolumeRow {
    pub fn new(original: impl Into<String>, clone_count: usize, original_volume: f64, plagiarized_volume: f64) -> Self {
        VolumeRow {
            original: original.into(),
            clone_count,
            original_volume,
            plagiarized_volume,
            ratio: volume_ratio(original_volume, plagiarized_volume),
        }
    }

    pub fn ratio_text(&self) -> String {
        render_ratio(self.ratio)
    }
}

fn volume_ratio(original: f64, plagiarized: f64) -> Option<f64> {
    (original > 0.0).then(|| plagiarized / original)
}

/// Ratio as a two-decimal percentage, `n/a` when undefined.
pub fn render_ratio(ratio: Option<f64>) -> String {
    match ratio {
        Some(r) => report::percent(r * 100.0),
        None => "n/a".to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeReport {
    /// Most clones first, then larger original volume, then name.
    pub rows: Vec<VolumeRow>,
    pub total_original: f64,
    pub total_plagiarized: f64,
    pub total_ratio: Option<f64>,
}

impl VolumeReport {
    pub fn from_rows(mut rows: Vec<VolumeRow>) -> Self {
        rows.sort_by(|a, b| {
            b.clone_count
                .cmp(&a.clone_count)
                .then_with(|| b.original_volume.total_cmp(&a.original_volume))
                .then_with(|| a.original.cmp(&b.original))
        });
        let total_original: f64 = rows.iter().map(|r| r.original_volume).sum();
        let total_plagiarized: f64 = rows.iter().map(|r| r.plagiarized_volume).sum();
        VolumeReport {
            rows,
            total_original,
            total_plagiarized,
            total_ratio: volume_ratio(total_original, total_plagiarized),
        }
    }

    pub fn render(&self) -> String {
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.original.clone(),
                    r.clone_count.to_string(),
                    report::thousands(r.original_volume, 3),
                    report::thousands(r.plagiarized_volume, 3),
                    r.ratio_text(),
                ]
            })
            .collect();
        rows.push(vec![
            "Total".to_string(),
            self.rows.iter().map(|r| r.clone_count).sum::<usize>().to_string(),
            report::thousands(self.total_original, 3),
            report::thousands(self.total_plagiarized, 3),
            render_ratio(self.total_ratio),
        ]);
        report::text_table(
            &["Original DApp", "# Clones", "Original volume", "Plagiarized volume", "Ratio"],
            &rows,
        )
    }
}

/// Volume accounting per clone cluster: the original's volume against the
/// summed volume of its clones.
pub fn volume_impact(clusters: &[DAppCloneCluster], dapps: &[DAppManifest]) -> VolumeReport {
    let by_name: BTreeMap<&str, &DAppManifest> = dapps.iter().map(|d| (d.name.as_str(), d)).collect();
    let volume = |name: &str| by_name.get(name).map_or(0.0, |d| d.volume);
    let rows = clusters
        .iter()
        .map(|c| {
            VolumeRow::new(
                c.original.clone(),
                c.clones.len(),
                volume(&c.original),
                c.clones.iter().map(|n| volume(n)).sum(),
            )
        })
        .collect();
    VolumeReport::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: u64) -> Address {
        Address::from_low_u64(n)
    }

    fn info(fp: &str, hash: u8) -> ContractInfo {
        ContractInfo {
            token_hash: Digest([hash; 32]),
            meta: MetaAttributes {
                opcode_count: 100,
                block_count: 20,
                runtime_byte_len: 200,
            },
            fingerprint: Fingerprint::parse(fp).unwrap(),
        }
    }

    fn dapp(name: &str, contracts: &[u64], deployers: &[u64], at: u64, volume: f64) -> DAppManifest {
        DAppManifest {
            name: name.into(),
            contracts: contracts.iter().map(|&c| a(c)).collect(),
            deployers: deployers.iter().map(|&d| a(d)).collect(),
            volume,
            deployed_at: at,
            category: None,
        }
    }

    // "ABCDEFGHIJ" vs one substitution -> 90; vs two -> 80
    fn store() -> FingerprintStore {
        let mut s = FingerprintStore::new();
        s.insert(a(1), info("ABCDEFGHIJ", 1));
        s.insert(a(2), info("ABCDEFGHIZ", 2));
        s.insert(a(3), info("ABCDEFGHYZ", 3));
        s.insert(a(4), info("KLMNOPQRST", 4));
        s.insert(a(9), info("0123456789", 9));
        s
    }

    fn templates() -> TemplateList {
        [(Digest([9; 32]), "token".to_string())].into_iter().collect()
    }

    #[test]
    fn template_exclusion() {
        let s = store();
        let t = templates();
        let r = exclude_templates(&dapp("x", &[1, 2, 9], &[100], 0, 0.0), &t, &s).unwrap();
        assert_eq!(r.contracts, vec![a(1), a(2)]);
        let r = exclude_templates(&dapp("x", &[1, 2], &[100], 0, 0.0), &t, &s).unwrap();
        assert_eq!(r.contracts.len(), 2);
        let r = exclude_templates(&dapp("x", &[9], &[100], 0, 0.0), &t, &s).unwrap();
        assert!(r.template_only);
        let err = exclude_templates(&dapp("x", &[77], &[100], 0, 0.0), &t, &s).unwrap_err();
        assert!(matches!(err, DAppError::UnknownContract { .. }));
    }

    #[test]
    fn single_contract_dapps() {
        let s = store();
        let sim = dapp_similarity(&dapp("x", &[1], &[100], 0, 0.0), &dapp("y", &[2], &[101], 0, 0.0), &s, &TemplateList::new()).unwrap();
        assert_eq!(sim, 90.0);
    }

    #[test]
    fn directional_normalization() {
        let s = store();
        // A = {1, 4}, B = {2}: best edge 1-2 = 90
        let (ab, ba) = directional_similarity(&[a(1), a(4)], &[a(2)], &s).unwrap();
        assert_eq!(ab, 45.0);
        assert_eq!(ba, 90.0);
        let sim = dapp_similarity(&dapp("x", &[1, 4], &[100], 0, 0.0), &dapp("y", &[2], &[101], 0, 0.0), &s, &TemplateList::new()).unwrap();
        assert_eq!(sim, 90.0);
    }

    #[test]
    fn identical_dapps_score_100() {
        let s = store();
        let d = dapp("x", &[1, 4], &[100], 0, 0.0);
        assert_eq!(dapp_similarity(&d, &d, &s, &TemplateList::new()).unwrap(), 100.0);
    }

    #[test]
    fn template_only_error() {
        let s = store();
        let err = dapp_similarity(&dapp("x", &[9], &[100], 0, 0.0), &dapp("y", &[1], &[101], 0, 0.0), &s, &templates()).unwrap_err();
        assert_eq!(err, DAppError::TemplateOnly("x".into()));
    }

    #[test]
    fn shared_deployer_is_not_a_clone() {
        let s = store();
        let dapps = [dapp("x", &[1], &[100], 0, 0.0), dapp("y", &[2], &[100, 101], 5, 0.0)];
        let r = detect_clones(&dapps, &s, &TemplateList::new(), 70.0).unwrap();
        assert!(r.pairs.is_empty());
        assert!(r.clusters.is_empty());
    }

    #[test]
    fn three_similar_dapps_one_cluster() {
        let s = store();
        let dapps = [
            dapp("late", &[3], &[102], 30, 0.0),
            dapp("first", &[1], &[100], 10, 0.0),
            dapp("mid", &[2], &[101], 20, 0.0),
            dapp("other", &[4], &[103], 0, 0.0),
        ];
        let r = detect_clones(&dapps, &s, &TemplateList::new(), 70.0).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert_eq!(r.clusters, vec![DAppCloneCluster { original: "first".into(), clones: vec!["late".into(), "mid".into()] }]);
        let p = r.pairs.iter().find(|p| p.clone == "late" && p.original == "mid").unwrap();
        assert_eq!(p.score, 90.0);
    }

    #[test]
    fn deploy_time_tie_breaks_by_name() {
        let s = store();
        let dapps = [dapp("b", &[1], &[100], 10, 0.0), dapp("a", &[2], &[101], 10, 0.0)];
        let r = detect_clones(&dapps, &s, &TemplateList::new(), 70.0).unwrap();
        assert_eq!(r.pairs[0].original, "a");
    }

    #[test]
    fn manifest_validation() {
        let s = store();
        let dapps = [dapp("x", &[], &[100], 0, 0.0)];
        assert!(matches!(detect_clones(&dapps, &s, &TemplateList::new(), 70.0), Err(DAppError::InvalidManifest { .. })));
        let dapps = [dapp("x", &[1], &[100], 0, 0.0), dapp("x", &[2], &[101], 0, 0.0)];
        assert_eq!(detect_clones(&dapps, &s, &TemplateList::new(), 70.0), Err(DAppError::DuplicateName("x".into())));
    }

    #[test]
    fn volume_rows() {
        assert_eq!(VolumeRow::new("PoWTF", 4, 331.074, 1012.649).ratio_text(), "305.87%");
        assert_eq!(VolumeRow::new("x", 1, 10.0, 0.0).ratio_text(), "0.00%");
        assert_eq!(VolumeRow::new("x", 1, 0.0, 5.0).ratio_text(), "n/a");
    }

    #[test]
    fn volume_from_clusters() {
        let dapps = [
            dapp("orig", &[1], &[1], 0, 100.0),
            dapp("c1", &[2], &[2], 1, 30.0),
            dapp("c2", &[3], &[3], 2, 20.0),
        ];
        let clusters = [DAppCloneCluster { original: "orig".into(), clones: vec!["c1".into(), "c2".into()] }];
        let r = volume_impact(&clusters, &dapps);
        assert_eq!(r.rows[0].plagiarized_volume, 50.0);
        assert_eq!(r.rows[0].ratio_text(), "50.00%");
        assert_eq!(render_ratio(r.total_ratio), "50.00%");
        assert!(r.render().contains("orig"));
    }
}
