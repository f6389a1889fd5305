//! Monthly money-transfer, account-creation and contract-invocation graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::DAppRegistry;
use crate::model::{Chain, DAppCategory, DAppLabel, MonthKey, NodeClass, NodeId, Trace, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum GraphKind {
    #[serde(rename = "MTG")]
    Mtg,
    #[serde(rename = "ACG")]
    Acg,
    #[serde(rename = "CIG")]
    Cig,
}

impl GraphKind {
    pub const ALL: [GraphKind; 3] = [GraphKind::Mtg, GraphKind::Acg, GraphKind::Cig];

    pub fn trace_kind(self) -> TraceKind {
        match self {
            GraphKind::Mtg => TraceKind::MoneyTransfer,
            GraphKind::Acg => TraceKind::AccountCreation,
            GraphKind::Cig => TraceKind::ContractInvocation,
        }
    }

    pub fn for_trace_kind(kind: TraceKind) -> GraphKind {
        match kind {
            TraceKind::MoneyTransfer => GraphKind::Mtg,
            TraceKind::AccountCreation => GraphKind::Acg,
            TraceKind::ContractInvocation => GraphKind::Cig,
        }
    }

    /// Graph kinds a chain produces. UTXO chains only move money.
    pub fn applicable(chain: Chain) -> &'static [GraphKind] {
        match chain {
            Chain::Bitcoin => &[GraphKind::Mtg],
            _ => &GraphKind::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Mtg => "MTG",
            GraphKind::Acg => "ACG",
            GraphKind::Cig => "CIG",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MTG" => Ok(GraphKind::Mtg),
            "ACG" => Ok(GraphKind::Acg),
            "CIG" => Ok(GraphKind::Cig),
            _ => Err(Error::Parse(format!("unknown graph kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: NodeId,
    pub label: Option<DAppLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub weight_sum: Decimal,
    pub trace_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeData {
    pub weight_sum: Decimal,
    pub trace_count: u64,
}

/// Edge addressed by node indices.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'a> {
    pub source: usize,
    pub target: usize,
    pub data: &'a EdgeData,
}

/// Directed graph of one `(chain, kind, month)`.
///
/// Nodes are kept sorted by [`NodeId`], so node indices follow identifier
/// order. Edges are unique per ordered pair.
#[derive(Debug, Clone)]
pub struct MonthlyGraph {
    chain: Chain,
    kind: GraphKind,
    month: MonthKey,
    nodes: Vec<GraphNode>,
    index: HashMap<NodeId, usize>,
    edges: BTreeMap<(usize, usize), EdgeData>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl MonthlyGraph {
    pub fn empty(chain: Chain, kind: GraphKind, month: MonthKey) -> Self {
        Self::assemble(chain, kind, month, Vec::new(), BTreeMap::new())
    }

    fn assemble(
        chain: Chain,
        kind: GraphKind,
        month: MonthKey,
        nodes: Vec<GraphNode>,
        edges: BTreeMap<(usize, usize), EdgeData>,
    ) -> Self {
        let n = nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        // BTreeMap order keeps every adjacency list sorted.
        for &(s, t) in edges.keys() {
            out_adj[s].push(t);
        }
        for &(s, t) in edges.keys() {
            in_adj[t].push(s);
        }
        for list in &mut in_adj {
            list.sort_unstable();
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        MonthlyGraph {
            chain,
            kind,
            month,
            nodes,
            index,
            edges,
            out_adj,
            in_adj,
        }
    }

    /// Graph with unit-weight edges over an explicit node set, so isolated
    /// nodes can be represented. Endpoints missing from `nodes` are added;
    /// repeated pairs count as parallel traces.
    pub fn from_edges(
        chain: Chain,
        kind: GraphKind,
        month: MonthKey,
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Self {
        let edges: Vec<(NodeId, NodeId)> = edges.into_iter().collect();
        let mut ids: BTreeSet<NodeId> = nodes.into_iter().collect();
        for (s, t) in &edges {
            ids.insert(s.clone());
            ids.insert(t.clone());
        }
        let nodes: Vec<GraphNode> = ids.into_iter().map(|id| GraphNode { id, label: None }).collect();
        let index: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
        let mut agg: BTreeMap<(usize, usize), EdgeData> = BTreeMap::new();
        for (s, t) in &edges {
            let e = agg.entry((index[s], index[t])).or_insert(EdgeData {
                weight_sum: Decimal::ZERO,
                trace_count: 0,
            });
            e.weight_sum += Decimal::ONE;
            e.trace_count += 1;
        }
        Self::assemble(chain, kind, month, nodes, agg)
    }

    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn month(&self) -> MonthKey {
        self.month
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeId {
        &self.nodes[i].id
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_adj[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    pub fn edge_refs(&self) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        self.edges.iter().map(|(&(source, target), data)| EdgeRef { source, target, data })
    }

    pub fn edges(&self) -> impl Iterator<Item = AggregatedEdge> + '_ {
        self.edge_refs().map(|e| AggregatedEdge {
            source: self.nodes[e.source].id.clone(),
            target: self.nodes[e.target].id.clone(),
            weight_sum: e.data.weight_sum,
            trace_count: e.data.trace_count,
        })
    }

    pub fn edge_between(&self, i: usize, j: usize) -> Option<&EdgeData> {
        self.edges.get(&(i, j))
    }

    pub fn edge(&self, source: &NodeId, target: &NodeId) -> Option<&EdgeData> {
        let s = self.index_of(source)?;
        let t = self.index_of(target)?;
        self.edge_between(s, t)
    }

    /// Number of traces aggregated into the graph.
    pub fn trace_count(&self) -> u64 {
        self.edges.values().map(|e| e.trace_count).sum()
    }

    /// Sum of `trace_count` over edges incident to node `i`. A self-loop
    /// counts once.
    pub fn incident_trace_count(&self, i: usize) -> u64 {
        let out: u64 = self.out_adj[i].iter().map(|&t| self.edges[&(i, t)].trace_count).sum();
        let inc: u64 = self.in_adj[i]
            .iter()
            .filter(|&&s| s != i)
            .map(|&s| self.edges[&(s, i)].trace_count)
            .sum();
        out + inc
    }

    /// Attaches registry labels to every node.
    pub fn apply_labels(&mut self, registry: &DAppRegistry) {
        for node in &mut self.nodes {
            node.label = registry.label_of(&node.id).cloned();
        }
    }

    /// Copy of the graph without `ids` and their incident edges. Unknown ids
    /// are ignored.
    pub fn without_nodes(&self, ids: &[NodeId]) -> MonthlyGraph {
        let removed: BTreeSet<usize> = ids.iter().filter_map(|id| self.index_of(id)).collect();
        if removed.is_empty() {
            return self.clone();
        }
        self.retain(|i| !removed.contains(&i), |_, _| true)
    }

    /// Keeps the nodes selected by `keep_node` and the edges between kept
    /// nodes that pass `keep_edge`; nodes are re-indexed.
    fn retain(&self, keep_node: impl Fn(usize) -> bool, keep_edge: impl Fn(usize, usize) -> bool) -> MonthlyGraph {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep_node(i) {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|(&(s, t), _)| remap[s] != usize::MAX && remap[t] != usize::MAX && keep_edge(s, t))
            .map(|(&(s, t), d)| ((remap[s], remap[t]), *d))
            .collect();
        Self::assemble(self.chain, self.kind, self.month, nodes, edges)
    }

    pub fn write_edge_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["source", "target", "weight_sum", "trace_count"])?;
        for e in self.edges() {
            wtr.write_record([
                e.source.to_string(),
                e.target.to_string(),
                e.weight_sum.normalize().to_string(),
                e.trace_count.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<edges>", e))?;
        Ok(())
    }

    pub fn write_node_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["id", "class", "dapp_name", "dapp_category"])?;
        for n in &self.nodes {
            let (name, cat) = match &n.label {
                Some(l) => (l.name.as_str(), l.category.as_str()),
                None => ("", ""),
            };
            wtr.write_record([n.id.to_string().as_str(), n.id.class().as_str(), name, cat])?;
        }
        wtr.flush().map_err(|e| Error::io("<nodes>", e))?;
        Ok(())
    }
}

/// Aggregates one month of traces of a single kind into a graph.
///
/// Parallel traces between the same ordered pair collapse into one edge whose
/// weight is the sum and whose count is the number of traces.
pub fn build_graph<'a>(
    chain: Chain,
    kind: GraphKind,
    month: MonthKey,
    traces: impl IntoIterator<Item = &'a Trace>,
) -> Result<MonthlyGraph> {
    let expected = kind.trace_kind();
    let mut node_class: BTreeMap<NodeId, NodeClass> = BTreeMap::new();
    let mut pairs: BTreeMap<(NodeId, NodeId), EdgeData> = BTreeMap::new();

    for t in traces {
        if t.chain != chain {
            return Err(Error::Contract(format!("{} trace in {chain} graph", t.chain)));
        }
        if t.kind != expected {
            return Err(Error::Contract(format!("{:?} trace in {kind} graph", t.kind)));
        }
        if t.month() != month {
            return Err(Error::Contract(format!(
                "trace {}#{} from {} in {month} graph",
                t.tx_id,
                t.ordinal,
                t.month()
            )));
        }
        for id in [&t.source, &t.target] {
            let class = node_class.entry(id.clone()).or_insert(id.class());
            if id.class() == NodeClass::Contract {
                *class = NodeClass::Contract;
            }
        }
        let e = pairs.entry((t.source.clone(), t.target.clone())).or_insert(EdgeData {
            weight_sum: Decimal::ZERO,
            trace_count: 0,
        });
        e.weight_sum += t.weight;
        e.trace_count += 1;
    }

    let mut index = HashMap::with_capacity(node_class.len());
    let nodes: Vec<GraphNode> = node_class
        .into_iter()
        .enumerate()
        .map(|(i, (id, class))| {
            let id = id.with_class(class);
            index.insert(id.clone(), i);
            GraphNode { id, label: None }
        })
        .collect();
    let edges: BTreeMap<(usize, usize), EdgeData> = pairs
        .into_iter()
        .map(|((s, t), d)| ((index[&s], index[&t]), d))
        .collect();

    let graph = MonthlyGraph::assemble(chain, kind, month, nodes, edges);
    if kind == GraphKind::Acg {
        if let Some(i) = (0..graph.node_count()).find(|&i| graph.in_degree(i) > 1) {
            return Err(Error::Data(format!(
                "{} created by {} accounts in {month}",
                graph.node(i),
                graph.in_degree(i)
            )));
        }
    }
    Ok(graph)
}

/// Edges with at least one labeled endpoint, optionally restricted to a
/// category on either end. Requires [`MonthlyGraph::apply_labels`] first.
pub fn extract_dapp_subgraph(graph: &MonthlyGraph, category: Option<DAppCategory>) -> MonthlyGraph {
    let matches = |i: usize| match (&graph.nodes[i].label, category) {
        (Some(_), None) => true,
        (Some(l), Some(c)) => l.category == c,
        (None, _) => false,
    };
    let mut keep = vec![false; graph.node_count()];
    for e in graph.edge_refs() {
        if matches(e.source) || matches(e.target) {
            keep[e.source] = true;
            keep[e.target] = true;
        }
    }
    graph.retain(|i| keep[i], |s, t| matches(s) || matches(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareReport {
    pub total_traces: u64,
    pub dapp_traces: u64,
    /// Share of all traces touching each category. A trace between two
    /// categories counts toward both, so these may sum above the DApp share.
    pub categories: BTreeMap<DAppCategory, f64>,
    pub non_dapp_share: f64,
}

impl ShareReport {
    pub fn dapp_share(&self) -> f64 {
        1.0 - self.non_dapp_share
    }
}

/// Trace-count shares per DApp category over the given graphs. `None` when
/// the graphs hold no traces.
pub fn dapp_share_report(graphs: &[&MonthlyGraph], registry: &DAppRegistry) -> Option<ShareReport> {
    let mut total = 0u64;
    let mut related = 0u64;
    let mut per_cat: BTreeMap<DAppCategory, u64> = BTreeMap::new();
    for g in graphs {
        let labels: Vec<Option<&DAppLabel>> = g.nodes.iter().map(|n| registry.label_of(&n.id)).collect();
        for e in g.edge_refs() {
            let n = e.data.trace_count;
            total += n;
            let cats: BTreeSet<DAppCategory> = [labels[e.source], labels[e.target]]
                .into_iter()
                .flatten()
                .map(|l| l.category)
                .collect();
            if !cats.is_empty() {
                related += n;
            }
            for c in cats {
                *per_cat.entry(c).or_default() += n;
            }
        }
    }
    if total == 0 {
        return None;
    }
    let denom = total as f64;
    Some(ShareReport {
        total_traces: total,
        dapp_traces: related,
        categories: per_cat.into_iter().map(|(c, n)| (c, n as f64 / denom)).collect(),
        non_dapp_share: 1.0 - related as f64 / denom,
    })
}
