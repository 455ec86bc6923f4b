//! Typed directed multigraph of system entities assembled from audit events.
//!
//! Entity keys are authoritative: every key maps to exactly one node, and
//! repeated (src, dst, kind) events collapse into a single edge carrying a
//! multiplicity. Assembly is order-insensitive: any permutation of the
//! event stream yields an identical graph.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::event::{EdgeKind, EventError, EventRecord, NodeType};

/// Dense node index, valid for one finalized graph.
pub type NodeId = usize;

/// Collapsed edge between two entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    /// Earliest timestamp among the collapsed events.
    pub ts: i64,
    /// Number of raw events collapsed into this edge.
    pub multiplicity: u64,
}

/// Immutable provenance graph. Node ids follow the sorted order of entity
/// keys, edges are sorted by (src, dst, kind), so two graphs built from
/// the same event multiset compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceGraph {
    keys: Vec<String>,
    index: BTreeMap<String, NodeId>,
    types: Vec<NodeType>,
    attrs: Vec<BTreeMap<String, String>>,
    edges: Vec<Edge>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    /// Distinct undirected neighbors per node, sorted.
    neighbors: Vec<Vec<NodeId>>,
}

impl ProvenanceGraph {
    pub fn node_count(&self) -> usize {
        self.keys.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Total raw events represented, i.e. the sum of edge multiplicities.
    pub fn event_count(&self) -> u64 {
        self.edges.iter().map(|e| e.multiplicity).sum()
    }

    pub fn node_id(&self, key: &str) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: NodeId) -> &str {
        &self.keys[id]
    }

    pub fn node_type(&self, id: NodeId) -> NodeType {
        self.types[id]
    }

    pub fn attrs(&self, id: NodeId) -> &BTreeMap<String, String> {
        &self.attrs[id]
    }

    pub fn attr(&self, id: NodeId, name: &str) -> Option<&str> {
        self.attrs[id].get(name).map(String::as_str)
    }

    /// Nodes in id order (which is sorted key order).
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &str, NodeType)> {
        self.keys
            .iter()
            .zip(self.types.iter())
            .enumerate()
            .map(|(id, (key, ty))| (id, key.as_str(), *ty))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    /// Indices into [`ProvenanceGraph::edges`] of edges arriving at `id`.
    pub fn in_edge_ids(&self, id: NodeId) -> &[usize] {
        &self.in_edges[id]
    }

    /// Indices into [`ProvenanceGraph::edges`] of edges leaving `id`.
    pub fn out_edge_ids(&self, id: NodeId) -> &[usize] {
        &self.out_edges[id]
    }

    /// Distinct in- and out-neighbors of `id`, sorted by node id.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id]
    }

    pub fn weighted_in_degree(&self, id: NodeId) -> u64 {
        self.in_edges[id].iter().map(|&e| self.edges[e].multiplicity).sum()
    }

    pub fn weighted_out_degree(&self, id: NodeId) -> u64 {
        self.out_edges[id].iter().map(|&e| self.edges[e].multiplicity).sum()
    }

    /// Ids of all process nodes, ascending.
    pub fn process_ids(&self) -> Vec<NodeId> {
        (0..self.node_count())
            .filter(|&id| self.types[id] == NodeType::Process)
            .collect()
    }

    /// Class labels (node types) for every node, in id order.
    pub fn type_labels(&self) -> Vec<usize> {
        self.types.iter().map(|t| t.class_index()).collect()
    }
}

/// Streaming accumulator for [`ProvenanceGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeMap<String, (NodeType, BTreeMap<String, String>)>,
    // (src key, dst key, kind index) -> (min ts, multiplicity)
    edges: BTreeMap<(String, String, u8), (i64, u64)>,
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Ingest one validated audit event. Event attrs are merged into the
    /// object node; on conflicting values for the same attr key the
    /// lexicographically least value wins, keeping assembly
    /// order-insensitive.
    pub fn add_event(&mut self, event: &EventRecord) -> Result<(), GraphError> {
        let kind = event.edge_kind().map_err(GraphError::Event)?;
        if event.sub_t != NodeType::Process {
            return Err(GraphError::Event(EventError::NonProcessSubject {
                subject_type: event.sub_t,
            }));
        }
        self.upsert_node(&event.sub, event.sub_t, None)?;
        self.upsert_node(&event.obj, event.obj_t, Some(&event.attrs))?;
        self.bump_edge(&event.sub, &event.obj, kind, event.ts, 1);
        Ok(())
    }

    /// Register a node directly (used when loading a persisted graph).
    pub fn add_node(
        &mut self,
        key: &str,
        node_type: NodeType,
        attrs: &BTreeMap<String, String>,
    ) -> Result<(), GraphError> {
        self.upsert_node(key, node_type, Some(attrs))
    }

    /// Register a collapsed edge directly. Both endpoints must already be
    /// known and their types must match the edge kind's pair.
    pub fn add_collapsed_edge(
        &mut self,
        src: &str,
        dst: &str,
        kind: EdgeKind,
        ts: i64,
        multiplicity: u64,
    ) -> Result<(), GraphError> {
        let src_type = self
            .nodes
            .get(src)
            .ok_or_else(|| GraphError::MissingEndpoint { key: src.into() })?
            .0;
        let dst_type = self
            .nodes
            .get(dst)
            .ok_or_else(|| GraphError::MissingEndpoint { key: dst.into() })?
            .0;
        if src_type != NodeType::Process || dst_type != kind.object_type() {
            return Err(GraphError::PairMismatch {
                kind,
                src_type,
                dst_type,
            });
        }
        if multiplicity == 0 {
            return Err(GraphError::ZeroMultiplicity);
        }
        self.bump_edge(src, dst, kind, ts, multiplicity);
        Ok(())
    }

    fn upsert_node(
        &mut self,
        key: &str,
        node_type: NodeType,
        attrs: Option<&BTreeMap<String, String>>,
    ) -> Result<(), GraphError> {
        match self.nodes.get_mut(key) {
            Some((existing, node_attrs)) => {
                if *existing != node_type {
                    return Err(GraphError::TypeConflict {
                        key: key.into(),
                        existing: *existing,
                        observed: node_type,
                    });
                }
                if let Some(attrs) = attrs {
                    for (k, v) in attrs {
                        match node_attrs.get_mut(k) {
                            Some(current) if v < current => {
                                *current = v.clone();
                            }
                            Some(_) => {}
                            None => {
                                node_attrs.insert(k.clone(), v.clone());
                            }
                        }
                    }
                }
            }
            None => {
                self.nodes.insert(
                    key.into(),
                    (node_type, attrs.cloned().unwrap_or_default()),
                );
            }
        }
        Ok(())
    }

    fn bump_edge(&mut self, src: &str, dst: &str, kind: EdgeKind, ts: i64, mult: u64) {
        let entry = self
            .edges
            .entry((src.into(), dst.into(), kind.index()))
            .or_insert((ts, 0));
        entry.0 = entry.0.min(ts);
        entry.1 += mult;
    }

    pub fn finalize(self) -> ProvenanceGraph {
        let keys: Vec<String> = self.nodes.keys().cloned().collect();
        let index: BTreeMap<String, NodeId> = keys
            .iter()
            .enumerate()
            .map(|(id, k)| (k.clone(), id))
            .collect();
        let mut types = Vec::with_capacity(keys.len());
        let mut attrs = Vec::with_capacity(keys.len());
        for key in &keys {
            let (ty, at) = &self.nodes[key];
            types.push(*ty);
            attrs.push(at.clone());
        }

        // BTreeMap order on (src key, dst key, kind) matches (src id,
        // dst id, kind) because key -> id is monotone.
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|((src, dst, kind), (ts, mult))| Edge {
                src: index[src],
                dst: index[dst],
                kind: EdgeKind::from_index(*kind).expect("stored index is valid"),
                ts: *ts,
                multiplicity: *mult,
            })
            .collect();

        let n = keys.len();
        let mut in_edges = alloc::vec![Vec::new(); n];
        let mut out_edges = alloc::vec![Vec::new(); n];
        let mut neighbors = alloc::vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.src].push(i);
            in_edges[e.dst].push(i);
            neighbors[e.src].push(e.dst);
            neighbors[e.dst].push(e.src);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }

        ProvenanceGraph {
            keys,
            index,
            types,
            attrs,
            edges,
            in_edges,
            out_edges,
            neighbors,
        }
    }
}

/// Build a graph from a stream of events.
pub fn build_graph<'a, I>(events: I) -> Result<ProvenanceGraph, GraphError>
where
    I: IntoIterator<Item = &'a EventRecord>,
{
    let mut builder = GraphBuilder::new();
    for event in events {
        builder.add_event(event)?;
    }
    Ok(builder.finalize())
}

/// Integrity violations during graph assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    Event(EventError),
    /// The same entity key was observed with two different node types.
    TypeConflict {
        key: String,
        existing: NodeType,
        observed: NodeType,
    },
    MissingEndpoint { key: String },
    PairMismatch {
        kind: EdgeKind,
        src_type: NodeType,
        dst_type: NodeType,
    },
    ZeroMultiplicity,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Event(e) => write!(f, "invalid event: {e}"),
            GraphError::TypeConflict {
                key,
                existing,
                observed,
            } => write!(
                f,
                "entity {key:?} observed as both {existing} and {observed}"
            ),
            GraphError::MissingEndpoint { key } => {
                write!(f, "edge endpoint {key:?} is not in the node table")
            }
            GraphError::PairMismatch {
                kind,
                src_type,
                dst_type,
            } => write!(
                f,
                "edge kind {kind} does not match endpoint types {src_type}-{dst_type}"
            ),
            GraphError::ZeroMultiplicity => f.write_str("edge multiplicity must be positive"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphError {}
