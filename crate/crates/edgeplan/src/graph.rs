//! Training dataflow graphs.
//!
//! A [`TrainingGraph`] is the unit of work our optimizer schedules: one
//! node per operator of a training step (forward ops, the loss, backward
//! ops), directed edges for data dependencies, and a fixed topological
//! execution order. Node ids are dense (`1..=n`); the execution order is a
//! permutation of the ids and assigns every node a *slot* — slot `v` is
//! the timestep at which node `v` is first computed.
//!
//! Graphs are either built synthetically from a [`GraphSpec`] (chains,
//! chains with skip connections, attention-style blocks) or loaded from a
//! JSON file (see [`load_graph`]). Synthetic construction derives the
//! backward subgraph mechanically from the forward edges: the gradient op
//! of a layer consumes the incoming gradient(s), the layer's input
//! activation(s), and the layer's own output activation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

/// 1-based dense node identifier.
pub type NodeId = usize;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node ids must be dense 1..={expected}, found id {found}")]
    NonDenseIds { expected: usize, found: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeId),
    #[error("edge ({0}, {1}) references an unknown node")]
    UnknownEdgeEndpoint(NodeId, NodeId),
    #[error("execution order must be a permutation of the node ids")]
    OrderNotPermutation,
    #[error("graph depth must be at least 1")]
    ZeroDepth,
    #[error("layer tags must cover every layer: expected {expected}, got {got}")]
    TagsMismatch { expected: usize, got: usize },
    #[error("failed to read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("failed to write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("failed to parse graph file {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("failed to serialize graph: {0}")]
    Serialize(serde_json::Error),
}

// ---------------------------------------------------------------------------
// Graph specifications (synthetic construction)
// ---------------------------------------------------------------------------

/// Operator class of a layer, used by synthetic cost generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerTag {
    /// Middle-of-the-road compute and output size.
    Balanced,
    /// Cheap to (re)compute but with a large output: recomputation is
    /// usually the right way to evict it.
    CheapElementwise,
    /// Expensive to compute: transferring it to auxiliary storage is
    /// usually cheaper than running it again.
    HeavyCompute,
}

/// Topology family of a synthetic training graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    /// Straight chain of layers.
    Chain,
    /// Chain plus skip connections `f_i -> f_{i+2}` from every odd layer.
    SkipChain,
    /// Chain plus block-local long-range edges: within each window of four
    /// layers the first layer feeds every later layer of the window,
    /// mimicking the fan-out of an attention block.
    AttentionBlock,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphKind::Chain => "chain",
            GraphKind::SkipChain => "skip-chain",
            GraphKind::AttentionBlock => "attention-block",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for GraphKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(GraphKind::Chain),
            "skip-chain" => Ok(GraphKind::SkipChain),
            "attention-block" => Ok(GraphKind::AttentionBlock),
            other => Err(format!(
                "unknown graph kind {other:?} (expected chain, skip-chain, or attention-block)"
            )),
        }
    }
}

/// Recipe for a synthetic training graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub depth: usize,
    /// One tag per layer; drives synthetic cost generation.
    pub tags: Vec<LayerTag>,
}

impl GraphSpec {
    /// Spec with the default tag pattern for `depth` layers.
    pub fn new(kind: GraphKind, depth: usize) -> Result<Self, GraphError> {
        if depth == 0 {
            return Err(GraphError::ZeroDepth);
        }
        Ok(GraphSpec { kind, depth, tags: default_tags(depth) })
    }

    /// Spec with explicit per-layer tags.
    pub fn with_tags(kind: GraphKind, depth: usize, tags: Vec<LayerTag>) -> Result<Self, GraphError> {
        if depth == 0 {
            return Err(GraphError::ZeroDepth);
        }
        if tags.len() != depth {
            return Err(GraphError::TagsMismatch { expected: depth, got: tags.len() });
        }
        Ok(GraphSpec { kind, depth, tags })
    }
}

/// Default layer-tag pattern: in every window of eight layers, layers at
/// offsets 2 and 3 are cheap-but-large, layers at offsets 5 and 6 are
/// compute-heavy, the rest are balanced. This mirrors the alternating
/// texture of real convolutional stacks (cheap elementwise ops sandwiched
/// between expensive convolutions).
pub fn default_tags(depth: usize) -> Vec<LayerTag> {
    (1..=depth)
        .map(|i| match i % 8 {
            2 | 3 => LayerTag::CheapElementwise,
            5 | 6 => LayerTag::HeavyCompute,
            _ => LayerTag::Balanced,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// TrainingGraph
// ---------------------------------------------------------------------------

/// Node metadata as stored in graph files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub id: NodeId,
    pub label: String,
}

/// A validated training dataflow graph with a fixed execution order.
///
/// Slot indices are 1-based: `slot_of(id)` gives the timestep at which a
/// node is first computed, and all schedule matrices are indexed by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingGraph {
    nodes: Vec<NodeMeta>,
    edges: Vec<(NodeId, NodeId)>,
    order: Vec<NodeId>,
    /// Per-layer tags when the graph was synthesized; defaulted otherwise.
    layer_tags: Vec<LayerTag>,
    // Derived lookup tables (all slot-based, index 0 unused).
    slot_of: Vec<usize>,
    deps_by_slot: Vec<Vec<usize>>,
    users_by_slot: Vec<Vec<usize>>,
}

impl TrainingGraph {
    /// Build a graph from raw parts, checking just enough structure for the
    /// internal lookup tables to exist (dense unique ids, order a
    /// permutation, edges between known nodes). Semantic checks — acyclicity,
    /// topological order, single final node — live in [`validate`].
    pub fn from_parts(
        nodes: Vec<NodeMeta>,
        edges: Vec<(NodeId, NodeId)>,
        order: Vec<NodeId>,
        layer_tags: Vec<LayerTag>,
    ) -> Result<Self, GraphError> {
        let n = nodes.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = vec![false; n + 1];
        for node in &nodes {
            if node.id == 0 || node.id > n {
                return Err(GraphError::NonDenseIds { expected: n, found: node.id });
            }
            if seen[node.id] {
                return Err(GraphError::DuplicateNodeId(node.id));
            }
            seen[node.id] = true;
        }
        for &(a, b) in &edges {
            if a == 0 || a > n || b == 0 || b > n {
                return Err(GraphError::UnknownEdgeEndpoint(a, b));
            }
        }
        if order.len() != n {
            return Err(GraphError::OrderNotPermutation);
        }
        let mut slot_of = vec![0usize; n + 1];
        for (pos, &id) in order.iter().enumerate() {
            if id == 0 || id > n || slot_of[id] != 0 {
                return Err(GraphError::OrderNotPermutation);
            }
            slot_of[id] = pos + 1;
        }

        let mut deps_by_slot = vec![Vec::new(); n + 1];
        let mut users_by_slot = vec![Vec::new(); n + 1];
        for &(src, dst) in &edges {
            let s = slot_of[src];
            let d = slot_of[dst];
            deps_by_slot[d].push(s);
            users_by_slot[s].push(d);
        }
        for list in deps_by_slot.iter_mut().chain(users_by_slot.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }

        Ok(TrainingGraph {
            nodes,
            edges,
            order,
            layer_tags,
            slot_of,
            deps_by_slot,
            users_by_slot,
        })
    }

    /// Number of nodes (= number of timesteps in a schedule).
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in file order.
    pub fn nodes(&self) -> &[NodeMeta] {
        &self.nodes
    }

    /// Edges in file order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Execution order as a sequence of node ids.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// Per-layer tags (synthesized graphs carry their spec's tags; loaded
    /// graphs fall back to the default pattern).
    pub fn layer_tags(&self) -> &[LayerTag] {
        &self.layer_tags
    }

    /// Timestep slot (1-based) at which `id` is first computed.
    pub fn slot_of(&self, id: NodeId) -> usize {
        self.slot_of[id]
    }

    /// Node id occupying slot `k` (1-based).
    pub fn id_at(&self, slot: usize) -> NodeId {
        self.order[slot - 1]
    }

    /// Label of the node occupying slot `k`.
    pub fn label_at(&self, slot: usize) -> &str {
        let id = self.id_at(slot);
        &self.nodes.iter().find(|m| m.id == id).expect("dense ids").label
    }

    /// Direct dependencies of the node at slot `k`, as sorted slots.
    pub fn deps_of(&self, slot: usize) -> &[usize] {
        &self.deps_by_slot[slot]
    }

    /// Direct users of the node at slot `k`, as sorted slots.
    pub fn users_of(&self, slot: usize) -> &[usize] {
        &self.users_by_slot[slot]
    }

    /// All edges as (producer slot, consumer slot) pairs, deduplicated and
    /// sorted — the canonical edge view used by the optimizer.
    pub fn slot_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (self.slot_of[a], self.slot_of[b]))
            .collect();
        set.into_iter().collect()
    }

    /// Slot of the last user of slot `k`'s output, or `k` itself when the
    /// output is never consumed.
    pub fn last_use_of(&self, slot: usize) -> usize {
        self.users_by_slot[slot].iter().copied().max().unwrap_or(slot)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A single structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    /// Edge (a, b) where b's slot does not come after a's slot.
    OrderNotTopological { src: NodeId, dst: NodeId },
    /// The graph contains a directed cycle through this node.
    Cycle { member: NodeId },
    /// Self-loop.
    SelfEdge { node: NodeId },
    /// Duplicate edge in the edge list.
    DuplicateEdge { src: NodeId, dst: NodeId },
    /// Number of nodes with no outgoing edges differs from one.
    FinalNodeCount { count: usize },
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::OrderNotTopological { src, dst } => {
                write!(f, "execution order is not topological: edge ({src}, {dst}) runs backwards")
            }
            GraphViolation::Cycle { member } => write!(f, "cycle through node {member}"),
            GraphViolation::SelfEdge { node } => write!(f, "self-edge on node {node}"),
            GraphViolation::DuplicateEdge { src, dst } => write!(f, "duplicate edge ({src}, {dst})"),
            GraphViolation::FinalNodeCount { count } => {
                write!(f, "expected exactly one final node with no outgoing edges, found {count}")
            }
        }
    }
}

/// Result of [`validate`]: empty means structurally sound.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<GraphViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the semantic invariants of a training graph: DAG, topological
/// execution order, exactly one final node, no self or duplicate edges.
/// All violations are reported, not just the first.
pub fn validate(g: &TrainingGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = g.n();

    let mut seen_edges = BTreeSet::new();
    for &(a, b) in g.edges() {
        if a == b {
            report.violations.push(GraphViolation::SelfEdge { node: a });
        }
        if !seen_edges.insert((a, b)) {
            report.violations.push(GraphViolation::DuplicateEdge { src: a, dst: b });
        }
        if g.slot_of(a) >= g.slot_of(b) {
            report.violations.push(GraphViolation::OrderNotTopological { src: a, dst: b });
        }
    }

    // Cycle detection via Kahn's algorithm on ids.
    let mut indegree = vec![0usize; n + 1];
    let mut out = vec![Vec::new(); n + 1];
    for &(a, b) in g.edges() {
        if a != b {
            indegree[b] += 1;
            out[a].push(b);
        }
    }
    let mut queue: Vec<NodeId> = (1..=n).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0usize;
    while let Some(v) = queue.pop() {
        visited += 1;
        for &w in &out[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push(w);
            }
        }
    }
    if visited != n {
        if let Some(member) = (1..=n).find(|&v| indegree[v] > 0) {
            report.violations.push(GraphViolation::Cycle { member });
        }
    }

    let finals = (1..=n).filter(|&v| g.users_of(g.slot_of(v)).is_empty()).count();
    if finals != 1 {
        report.violations.push(GraphViolation::FinalNodeCount { count: finals });
    }

    report
}

// ---------------------------------------------------------------------------
// Synthetic construction
// ---------------------------------------------------------------------------

/// Build the training graph for a spec: one forward node per layer, one
/// loss node, one backward node per layer.
///
/// Node ids: `f_i = i`, `loss = depth+1`, `b_i = depth+1+i`. Execution
/// order: `f_1..f_d, loss, b_d..b_1`. The backward subgraph follows the
/// reverse-mode rule: for every forward edge `x -> y`, the gradient op of
/// `x` consumes the gradient op of `y` (or the loss when `y` is the loss)
/// and the activation `x`; every gradient op also consumes its own layer's
/// output activation.
pub fn build_training_graph(spec: &GraphSpec) -> TrainingGraph {
    let d = spec.depth;
    let loss_id = d + 1;
    let bwd = |layer: usize| d + 1 + layer;

    let mut nodes = Vec::with_capacity(2 * d + 1);
    for i in 1..=d {
        nodes.push(NodeMeta { id: i, label: format!("f{i}") });
    }
    nodes.push(NodeMeta { id: loss_id, label: "loss".to_string() });
    for i in 1..=d {
        nodes.push(NodeMeta { id: bwd(i), label: format!("b{i}") });
    }

    // Forward edges between layers, by kind.
    let mut fwd_edges: Vec<(usize, usize)> = Vec::new();
    for i in 1..d {
        fwd_edges.push((i, i + 1));
    }
    match spec.kind {
        GraphKind::Chain => {}
        GraphKind::SkipChain => {
            let mut i = 1;
            while i + 2 <= d {
                fwd_edges.push((i, i + 2));
                i += 2;
            }
        }
        GraphKind::AttentionBlock => {
            let mut s = 1;
            while s <= d {
                for j in (s + 2)..=(s + 3).min(d) {
                    fwd_edges.push((s, j));
                }
                s += 4;
            }
        }
    }
    fwd_edges.sort_unstable();
    fwd_edges.dedup();

    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    // Forward activations flowing into later layers, then the loss.
    edges.extend(fwd_edges.iter().copied());
    edges.push((d, loss_id));
    // Gradient chain: the loss seeds the last layer's gradient; for every
    // forward edge x -> y the gradient of y feeds the gradient of x.
    edges.push((loss_id, bwd(d)));
    for &(x, y) in fwd_edges.iter().rev() {
        edges.push((bwd(y), bwd(x)));
    }
    // Activation inputs of each gradient op: the layer's own output plus
    // the inputs the layer consumed in the forward pass.
    for i in 1..=d {
        edges.push((i, bwd(i)));
    }
    for &(x, y) in &fwd_edges {
        edges.push((x, bwd(y)));
    }

    let mut order: Vec<NodeId> = (1..=loss_id).collect();
    order.extend((1..=d).rev().map(bwd));

    TrainingGraph::from_parts(nodes, edges, order, spec.tags.clone())
        .expect("synthetic graphs are well-formed by construction")
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<NodeMeta>,
    edges: Vec<(NodeId, NodeId)>,
    order: Vec<NodeId>,
}

/// Serialize a graph to its canonical JSON text.
pub fn graph_to_json(g: &TrainingGraph) -> Result<String, GraphError> {
    let file = GraphFile {
        nodes: g.nodes.clone(),
        edges: g.edges.clone(),
        order: g.order.clone(),
    };
    serde_json::to_string_pretty(&file).map_err(GraphError::Serialize)
}

/// Parse a graph from JSON text. Layer tags are not part of the file
/// format; loaded graphs get the default tag pattern when their labels
/// follow the synthetic `f*/loss/b*` naming, and all-balanced otherwise.
pub fn graph_from_json(text: &str, origin: &str) -> Result<TrainingGraph, GraphError> {
    let file: GraphFile = serde_json::from_str(text).map_err(|source| GraphError::Parse {
        path: origin.to_string(),
        source,
    })?;
    let depth_guess = file.nodes.iter().filter(|m| m.label.starts_with('f')).count();
    let labelled = file.nodes.len() == 2 * depth_guess + 1
        && file.nodes.iter().any(|m| m.label == "loss");
    let tags = if labelled && depth_guess > 0 {
        default_tags(depth_guess)
    } else {
        vec![LayerTag::Balanced; file.nodes.len()]
    };
    TrainingGraph::from_parts(file.nodes, file.edges, file.order, tags)
}

/// Load a graph from a JSON file.
pub fn load_graph(path: &Path) -> Result<TrainingGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Read {
        path: path.display().to_string(),
        source,
    })?;
    graph_from_json(&text, &path.display().to_string())
}

/// Save a graph to a JSON file (lossless round trip with [`load_graph`]).
pub fn save_graph(g: &TrainingGraph, path: &Path) -> Result<(), GraphError> {
    let text = graph_to_json(g)?;
    std::fs::write(path, text).map_err(|source| GraphError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Stable content hash of a graph (nodes, edges, order), used to bind
/// schedule files to the graph they were computed for.
pub fn graph_hash(g: &TrainingGraph) -> String {
    let text = graph_to_json(g).expect("graph serialization is infallible for valid graphs");
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
