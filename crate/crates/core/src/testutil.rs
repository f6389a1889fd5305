//! Small fixtures shared by unit tests.

use rust_decimal::Decimal;

use crate::graph::{build_graph, GraphKind, MonthlyGraph};
use crate::model::{Chain, InitiatorRole, MonthKey, NodeId, Trace, TraceKind};

pub const EPOCH_MONTH: &str = "1970-01";

pub fn trace(kind: TraceKind, a: &str, b: &str, timestamp: u64, ordinal: u32) -> Trace {
    Trace {
        chain: Chain::Eosio,
        kind,
        source: NodeId::regular(Chain::Eosio, a).unwrap(),
        target: NodeId::regular(Chain::Eosio, b).unwrap(),
        weight: Decimal::ONE,
        timestamp,
        memo: None,
        initiator_role: InitiatorRole::User,
        tx_id: format!("t{ordinal}"),
        ordinal,
    }
}

/// EOSIO money-transfer graph in January 1970 with one trace per edge.
pub fn graph(edges: &[(&str, &str)]) -> MonthlyGraph {
    let ts: Vec<Trace> = edges
        .iter()
        .enumerate()
        .map(|(i, (a, b))| trace(TraceKind::MoneyTransfer, a, b, 0, i as u32))
        .collect();
    build_graph(Chain::Eosio, GraphKind::Mtg, month(EPOCH_MONTH), &ts).unwrap()
}

/// Graph over numbered nodes `n0000..`, isolated ones included. Node index
/// `i` in the result is node `i` of the input.
pub fn indexed_graph(n: usize, edges: &[(usize, usize)]) -> MonthlyGraph {
    let id = |i: usize| NodeId::regular(Chain::Eosio, format!("n{i:04}")).unwrap();
    MonthlyGraph::from_edges(
        Chain::Eosio,
        GraphKind::Mtg,
        month(EPOCH_MONTH),
        (0..n).map(id),
        edges.iter().map(|&(a, b)| (id(a), id(b))),
    )
}

pub fn month(s: &str) -> MonthKey {
    s.parse().unwrap()
}
