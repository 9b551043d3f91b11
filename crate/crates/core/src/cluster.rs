//! Similarity graph and connected-component clustering.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::address::{Address, Digest};
use crate::evm::DuplicateGroup;
use crate::similarity::SimilarityPair;
use crate::union_find::UnionFind;

/// Score floor for stored pairs, so clustering can be re-run at any higher
/// threshold without re-comparing.
pub const DEFAULT_PAIR_FLOOR: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("contract {0} is not the representative of any duplicate group")]
    UnknownRepresentative(Address),
}

/// Undirected weighted graph over contract ids. No self-loops, at most one
/// edge per unordered pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimilarityGraph {
    nodes: BTreeSet<Address>,
    edges: BTreeMap<(Address, Address), f64>,
}

impl SimilarityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: Address) {
        self.nodes.insert(id);
    }

    pub fn add_nodes<I: IntoIterator<Item = Address>>(&mut self, ids: I) {
        self.nodes.extend(ids);
    }

    /// Adds both endpoints and the edge. Self-loops are ignored; a repeated
    /// pair keeps the larger weight.
    pub fn add_edge(&mut self, a: Address, b: Address, weight: f64) {
        if a == b {
            self.add_node(a);
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.nodes.insert(a);
        self.nodes.insert(b);
        let w = self.edges.entry(key).or_insert(weight);
        if weight > *w {
            *w = weight;
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Address> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Address, Address, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, a: Address, b: Address) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains_key(&key)
    }
}

/// Nodes are every endpoint of `pairs`; edges are the pairs scoring at least
/// `threshold`.
pub fn build_graph(pairs: &[SimilarityPair], threshold: f64) -> SimilarityGraph {
    let mut g = SimilarityGraph::new();
    for p in pairs {
        if p.score >= threshold {
            g.add_edge(p.a, p.b, p.score);
        } else {
            g.add_node(p.a);
            g.add_node(p.b);
        }
    }
    g
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractCluster {
    /// Distinct contracts, sorted.
    pub members: Vec<Address>,
    /// Members plus every duplicate they stand for.
    pub total_population: usize,
    pub label: Option<String>,
}

impl ContractCluster {
    pub fn new(mut members: Vec<Address>) -> Self {
        members.sort();
        let total_population = members.len();
        ContractCluster {
            members,
            total_population,
            label: None,
        }
    }

    /// `"members (population)"`, e.g. `253 (509)`.
    pub fn size_label(&self) -> String {
        format!("{} ({})", self.members.len(), self.total_population)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Components {
    /// Components with at least one edge, largest first.
    pub clusters: Vec<ContractCluster>,
    /// Isolated nodes, sorted.
    pub singletons: Vec<Address>,
}

fn cluster_order(a: &ContractCluster, b: &ContractCluster) -> std::cmp::Ordering {
    b.members
        .len()
        .cmp(&a.members.len())
        .then_with(|| a.members.cmp(&b.members))
}

pub fn connected_components(g: &SimilarityGraph) -> Components {
    let ids: Vec<Address> = g.nodes.iter().copied().collect();
    let index: HashMap<Address, usize> = ids.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    for (a, b, _) in g.edges() {
        uf.union(index[&a], index[&b]);
    }
    let mut out = Components::default();
    for group in uf.groups() {
        if group.len() == 1 {
            out.singletons.push(ids[group[0]]);
        } else {
            out.clusters
                .push(ContractCluster::new(group.into_iter().map(|i| ids[i]).collect()));
        }
    }
    out.clusters.sort_by(cluster_order);
    out
}

/// Sets each cluster's population from the duplicate groups its members
/// represent.
pub fn expand_with_duplicates<'a, G>(
    mut clusters: Vec<ContractCluster>,
    groups: G,
) -> Result<Vec<ContractCluster>, ClusterError>
where
    G: IntoIterator<Item = &'a DuplicateGroup>,
{
    let sizes: HashMap<Address, usize> = groups
        .into_iter()
        .map(|g| (g.representative, g.size()))
        .collect();
    for c in &mut clusters {
        c.total_population = c
            .members
            .iter()
            .map(|m| sizes.get(m).copied().ok_or(ClusterError::UnknownRepresentative(*m)))
            .sum::<Result<usize, _>>()?;
    }
    Ok(clusters)
}

/// Human-labelled template contracts, keyed by token hash.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TemplateList {
    names: BTreeMap<Digest, String>,
}

impl TemplateList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token_hash: Digest, name: impl Into<String>) {
        self.names.insert(token_hash, name.into());
    }

    pub fn contains(&self, token_hash: &Digest) -> bool {
        self.names.contains_key(token_hash)
    }

    pub fn name(&self, token_hash: &Digest) -> Option<&str> {
        self.names.get(token_hash).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Digest, &str)> {
        self.names.iter().map(|(h, n)| (h, n.as_str()))
    }
}

impl FromIterator<(Digest, String)> for TemplateList {
    fn from_iter<I: IntoIterator<Item = (Digest, String)>>(iter: I) -> Self {
        TemplateList {
            names: iter.into_iter().collect(),
        }
    }
}

/// Labels each cluster with the names of the templates among its members.
pub fn label_clusters(
    clusters: &mut [ContractCluster],
    token_hashes: &HashMap<Address, Digest>,
    templates: &TemplateList,
) {
    for c in clusters {
        let names: BTreeSet<&str> = c
            .members
            .iter()
            .filter_map(|m| token_hashes.get(m))
            .filter_map(|h| templates.name(h))
            .collect();
        c.label = (!names.is_empty()).then(|| names.into_iter().collect::<Vec<_>>().join("; "));
    }
}
