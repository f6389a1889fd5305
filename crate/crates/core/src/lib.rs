//! Transaction-graph analytics for blockchain trace data.
//!
//! Traces from UTXO, account-model and action-model chains are normalized
//! into money transfers, account creations and contract invocations, grouped
//! into monthly graphs, and measured with degree-distribution, correlation
//! and connectivity metrics. Metric series are scanned for outliers with a
//! sliding z-score and each outlier is attributed to the nodes whose removal
//! makes it disappear. A rule-based detector flags accounts that push memo
//! advertisements through dust transfers.

pub mod error;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod outlier;
pub mod pipeline;
pub mod spam;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use graph::{build_graph, extract_dapp_subgraph, AggregatedEdge, GraphKind, MonthlyGraph};
pub use model::{
    month_of, month_range, Amount, Chain, DAppCategory, DAppLabel, InitiatorRole, MonthKey, NodeClass, NodeId,
    Trace, TraceKind,
};
