//! Bipartite domain graphs, the cross-domain system and training structures.
//!
//! Every graph shares one compressed adjacency layout ([`Graph`]): nodes are
//! kept sorted by [`NodeId`], so node indices and neighbor lists come out in
//! the same order on every run. Downstream samplers rely on that ordering for
//! seed-level reproducibility.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Namespace {
    SourceUser,
    TargetUser,
    Item,
}

impl Namespace {
    pub fn prefix(self) -> &'static str {
        match self {
            Namespace::SourceUser => "su",
            Namespace::TargetUser => "tu",
            Namespace::Item => "it",
        }
    }

    pub fn is_user(self) -> bool {
        !matches!(self, Namespace::Item)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Source,
    Target,
}

impl DomainTag {
    pub fn user_namespace(self) -> Namespace {
        match self {
            DomainTag::Source => Namespace::SourceUser,
            DomainTag::Target => Namespace::TargetUser,
        }
    }

    pub fn other(self) -> DomainTag {
        match self {
            DomainTag::Source => DomainTag::Target,
            DomainTag::Target => DomainTag::Source,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainTag::Source => "source",
            DomainTag::Target => "target",
        })
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(DomainTag::Source),
            "target" => Ok(DomainTag::Target),
            _ => Err(Error::InvalidParam(format!("unknown domain `{s}`"))),
        }
    }
}

/// A node key. Items are global; users are namespaced per domain, so equal
/// raw user keys in the two input files never collide.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub namespace: Namespace,
    pub local_id: String,
}

impl NodeId {
    pub fn new(namespace: Namespace, local_id: impl Into<String>) -> Self {
        NodeId {
            namespace,
            local_id: local_id.into(),
        }
    }

    pub fn item(local_id: impl Into<String>) -> Self {
        NodeId::new(Namespace::Item, local_id)
    }

    pub fn user(domain: DomainTag, local_id: impl Into<String>) -> Self {
        NodeId::new(domain.user_namespace(), local_id)
    }

    pub fn is_user(&self) -> bool {
        self.namespace.is_user()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace.prefix(), self.local_id)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (prefix, local) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParam(format!("node key `{s}` has no namespace")))?;
        let namespace = match prefix {
            "su" => Namespace::SourceUser,
            "tu" => Namespace::TargetUser,
            "it" => Namespace::Item,
            _ => {
                return Err(Error::InvalidParam(format!(
                    "node key `{s}` has unknown namespace `{prefix}`"
                )))
            }
        };
        Ok(NodeId::new(namespace, local))
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Undirected weighted graph in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl Default for Graph {
    fn default() -> Self {
        Graph {
            nodes: Vec::new(),
            index: HashMap::new(),
            offsets: vec![0],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }
}

impl Graph {
    /// Builds from sorted nodes and canonical edges `(a, b, w)` with `a < b`
    /// (indices into `nodes`), already free of duplicates.
    fn from_parts(nodes: Vec<NodeId>, edges: &[(usize, usize, f64)]) -> Graph {
        let n = nodes.len();
        let mut degree = vec![0usize; n];
        for &(a, b, _) in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut targets = vec![0u32; total];
        let mut weights = vec![0.0; total];
        let mut fill = offsets[..n].to_vec();
        for &(a, b, w) in edges {
            targets[fill[a]] = b as u32;
            weights[fill[a]] = w;
            fill[a] += 1;
            targets[fill[b]] = a as u32;
            weights[fill[b]] = w;
            fill[b] += 1;
        }
        for v in 0..n {
            let range = offsets[v]..offsets[v + 1];
            let mut row: Vec<(u32, f64)> = targets[range.clone()]
                .iter()
                .copied()
                .zip(weights[range.clone()].iter().copied())
                .collect();
            row.sort_by_key(|&(t, _)| t);
            for (slot, (t, w)) in range.zip(row) {
                targets[slot] = t;
                weights[slot] = w;
            }
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Graph {
            nodes,
            index,
            offsets,
            targets,
            weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in sorted order; a node's position is its index.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NodeId {
        &self.nodes[idx]
    }

    pub fn index_of(&self, node: &NodeId) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.index.contains_key(node)
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.offsets[idx + 1] - self.offsets[idx]
    }

    pub fn weighted_degree(&self, idx: usize) -> f64 {
        self.neighbor_weights(idx).iter().sum()
    }

    pub fn neighbor_indices(&self, idx: usize) -> &[u32] {
        &self.targets[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn neighbor_weights(&self, idx: usize) -> &[f64] {
        &self.weights[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbor_indices(a).binary_search(&(b as u32)).is_ok()
    }

    /// Neighbors of `node` with weights, sorted by node id.
    pub fn neighbors(&self, node: &NodeId) -> Result<Vec<(NodeId, f64)>> {
        let idx = self
            .index_of(node)
            .ok_or_else(|| Error::NotFound(node.clone()))?;
        Ok(self
            .neighbor_indices(idx)
            .iter()
            .zip(self.neighbor_weights(idx))
            .map(|(&t, &w)| (self.nodes[t as usize].clone(), w))
            .collect())
    }

    /// Each undirected edge once, as `(a, b, w)` with `a < b`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nodes.len()).flat_map(move |a| {
            self.neighbor_indices(a)
                .iter()
                .zip(self.neighbor_weights(a))
                .filter(move |(&b, _)| (b as usize) > a)
                .map(move |(&b, &w)| (a, b as usize, w))
        })
    }

    /// Indices of nodes whose namespace is `ns`. Nodes are sorted by
    /// namespace first, so this is a contiguous range.
    pub fn namespace_range(&self, ns: Namespace) -> std::ops::Range<usize> {
        let start = self.nodes.partition_point(|n| n.namespace < ns);
        let end = self.nodes.partition_point(|n| n.namespace <= ns);
        start..end
    }

    fn count_users(&self) -> usize {
        self.namespace_range(Namespace::SourceUser).len()
            + self.namespace_range(Namespace::TargetUser).len()
    }

    fn count_items(&self) -> usize {
        self.namespace_range(Namespace::Item).len()
    }

    /// Copy of this graph with additional edges between existing nodes.
    /// Extra edges must not duplicate existing ones.
    pub(crate) fn with_extra_edges(&self, extra: &[(usize, usize, f64)]) -> Graph {
        let mut edges: Vec<(usize, usize, f64)> = self.edges().collect();
        edges.extend(extra.iter().map(|&(a, b, w)| (a.min(b), a.max(b), w)));
        Graph::from_parts(self.nodes.clone(), &edges)
    }
}

/// Accumulates nodes and edges, collapsing duplicates to the max weight.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<NodeId>,
    edges: BTreeMap<(NodeId, NodeId), f64>,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeId) -> &mut Self {
        self.nodes.insert(node);
        self
    }

    /// Adds an undirected edge. Returns `false` when the pair was already
    /// present (the larger weight is kept).
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, weight: f64) -> Result<bool> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidGraph(format!(
                "edge {a} - {b} has non-positive or non-finite weight {weight}"
            )));
        }
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop on {a}")));
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        match self.edges.get_mut(&key) {
            Some(w) => {
                *w = w.max(weight);
                self.duplicates += 1;
                Ok(false)
            }
            None => {
                self.edges.insert(key, weight);
                Ok(true)
            }
        }
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn build(self) -> Graph {
        let nodes: Vec<NodeId> = self.nodes.into_iter().collect();
        let index: HashMap<&NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let edges: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|((a, b), &w)| (index[a], index[b], w))
            .collect();
        drop(index);
        Graph::from_parts(nodes, &edges)
    }
}

/// One domain's bipartite user-item graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainGraph {
    tag: DomainTag,
    graph: Graph,
}

impl DomainGraph {
    /// Wraps `graph` after checking that every user belongs to `tag` and
    /// every edge joins a user with an item.
    pub fn new(tag: DomainTag, graph: Graph) -> Result<Self> {
        let user_ns = tag.user_namespace();
        for node in graph.nodes() {
            if node.is_user() && node.namespace != user_ns {
                return Err(Error::InvalidGraph(format!(
                    "{node} does not belong to the {tag} domain"
                )));
            }
        }
        for (a, b, _) in graph.edges() {
            if graph.node(a).is_user() == graph.node(b).is_user() {
                return Err(Error::InvalidGraph(format!(
                    "edge {} - {} is not user-item",
                    graph.node(a),
                    graph.node(b)
                )));
            }
        }
        Ok(DomainGraph { tag, graph })
    }

    /// Builds from `(user_key, item_key, weight)` triples.
    pub fn from_interactions<'a, I>(tag: DomainTag, interactions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut builder = GraphBuilder::new();
        for (user, item, w) in interactions {
            builder.add_edge(NodeId::user(tag, user), NodeId::item(item), w)?;
        }
        DomainGraph::new(tag, builder.build())
    }

    pub fn tag(&self) -> DomainTag {
        self.tag
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn users(&self) -> &[NodeId] {
        let range = self.graph.namespace_range(self.tag.user_namespace());
        &self.graph.nodes()[range]
    }

    pub fn items(&self) -> &[NodeId] {
        let range = self.graph.namespace_range(Namespace::Item);
        &self.graph.nodes()[range]
    }

    pub fn user_range(&self) -> std::ops::Range<usize> {
        self.graph.namespace_range(self.tag.user_namespace())
    }

    pub fn item_range(&self) -> std::ops::Range<usize> {
        self.graph.namespace_range(Namespace::Item)
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn neighbors(&self, node: &NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.graph.neighbors(node)
    }

    /// Same nodes, with the given `(user, item)` edges removed.
    pub(crate) fn without_edges(&self, removed: &BTreeSet<(NodeId, NodeId)>) -> DomainGraph {
        let g = &self.graph;
        let edges: Vec<(usize, usize, f64)> = g
            .edges()
            .filter(|&(a, b, _)| {
                let (u, i) = if g.node(a).is_user() { (a, b) } else { (b, a) };
                !removed.contains(&(g.node(u).clone(), g.node(i).clone()))
            })
            .collect();
        DomainGraph {
            tag: self.tag,
            graph: Graph::from_parts(g.nodes().to_vec(), &edges),
        }
    }
}

/// Source and target domains plus their shared items.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossDomainSystem {
    source: DomainGraph,
    target: DomainGraph,
    shared_items: Vec<NodeId>,
}

impl CrossDomainSystem {
    pub fn new(source: DomainGraph, target: DomainGraph) -> Result<Self> {
        if source.tag() != DomainTag::Source || target.tag() != DomainTag::Target {
            return Err(Error::InvalidGraph(
                "expected a source and a target domain".into(),
            ));
        }
        let target_items: BTreeSet<&NodeId> = target.items().iter().collect();
        let shared_items = source
            .items()
            .iter()
            .filter(|i| target_items.contains(i))
            .cloned()
            .collect();
        Ok(CrossDomainSystem {
            source,
            target,
            shared_items,
        })
    }

    pub fn source(&self) -> &DomainGraph {
        &self.source
    }

    pub fn target(&self) -> &DomainGraph {
        &self.target
    }

    pub fn domain(&self, tag: DomainTag) -> &DomainGraph {
        match tag {
            DomainTag::Source => &self.source,
            DomainTag::Target => &self.target,
        }
    }

    /// Shared items, sorted.
    pub fn shared_items(&self) -> &[NodeId] {
        &self.shared_items
    }

    pub fn is_shared(&self, item: &NodeId) -> bool {
        self.shared_items.binary_search(item).is_ok()
    }

    pub(crate) fn with_domain(&self, domain: DomainGraph) -> Result<CrossDomainSystem> {
        match domain.tag() {
            DomainTag::Source => CrossDomainSystem::new(domain, self.target.clone()),
            DomainTag::Target => CrossDomainSystem::new(self.source.clone(), domain),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Single,
    Highway,
    Superhighway,
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureKind::Single => "single",
            StructureKind::Highway => "highway",
            StructureKind::Superhighway => "superhighway",
        })
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(StructureKind::Single),
            "highway" => Ok(StructureKind::Highway),
            "superhighway" => Ok(StructureKind::Superhighway),
            _ => Err(Error::InvalidParam(format!("unknown structure `{s}`"))),
        }
    }
}

/// How a structure was built. Construction fields are set only for
/// superhighway structures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: StructureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_pairs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub materialized_edges: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_weight_pairs: Option<u64>,
}

impl Provenance {
    pub fn plain(kind: StructureKind) -> Self {
        Provenance {
            kind,
            alpha: None,
            beta: None,
            source_candidates: None,
            target_candidates: None,
            candidate_pairs: None,
            materialized_edges: None,
            zero_weight_pairs: None,
        }
    }
}

/// The graph handed to a trainer.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingStructure {
    graph: Graph,
    provenance: Provenance,
}

impl TrainingStructure {
    pub fn new(graph: Graph, provenance: Provenance) -> Self {
        TrainingStructure { graph, provenance }
    }

    pub fn kind(&self) -> StructureKind {
        self.provenance.kind
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn neighbors(&self, node: &NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.graph.neighbors(node)
    }

    /// Wraps a single domain as a standalone structure, used for source-side
    /// pretraining.
    pub fn from_domain(domain: &DomainGraph) -> Self {
        TrainingStructure::new(
            domain.graph().clone(),
            Provenance::plain(StructureKind::Single),
        )
    }
}

/// The target domain alone.
pub fn single_structure(sys: &CrossDomainSystem) -> TrainingStructure {
    TrainingStructure::from_domain(sys.target())
}

/// Naive union of both domains; shared items collapse into one node.
pub fn merge_highway(sys: &CrossDomainSystem) -> TrainingStructure {
    let mut builder = GraphBuilder::new();
    for domain in [sys.source(), sys.target()] {
        let g = domain.graph();
        for node in g.nodes() {
            builder.add_node(node.clone());
        }
        for (a, b, w) in g.edges() {
            builder
                .add_edge(g.node(a).clone(), g.node(b).clone(), w)
                .expect("domain edges are valid");
        }
    }
    TrainingStructure::new(builder.build(), Provenance::plain(StructureKind::Highway))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub users: usize,
    pub items: usize,
    pub edges: usize,
    pub user_user_edges: usize,
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_items: Option<usize>,
}

/// Counts for any graph. Density is `edges / (users * items)`, 0 when
/// either side is empty.
pub fn stats(g: &Graph) -> StatsReport {
    let users = g.count_users();
    let items = g.count_items();
    let edges = g.edge_count();
    let user_user_edges = g
        .edges()
        .filter(|&(a, b, _)| g.node(a).is_user() && g.node(b).is_user())
        .count();
    let cells = users as f64 * items as f64;
    StatsReport {
        users,
        items,
        edges,
        user_user_edges,
        density: if cells > 0.0 {
            edges as f64 / cells
        } else {
            0.0
        },
        shared_items: None,
    }
}

/// Per-domain and merged counts for a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemStats {
    pub source: StatsReport,
    pub target: StatsReport,
    pub shared_items: usize,
}

pub fn system_stats(sys: &CrossDomainSystem) -> SystemStats {
    SystemStats {
        source: stats(sys.source().graph()),
        target: stats(sys.target().graph()),
        shared_items: sys.shared_items().len(),
    }
}
