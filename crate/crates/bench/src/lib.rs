//! Fixtures for the criterion benchmarks in `benches/`.

use chaingraph::graph::{build_graph, GraphKind, MonthlyGraph};
use chaingraph::synth::{gen_power_law_graph, DEFAULT_MONTH};
use chaingraph::Chain;

/// Money-transfer graph with power-law out-degrees over `n` accounts.
pub fn power_law_graph(n: usize, seed: u64) -> MonthlyGraph {
    let traces = gen_power_law_graph(n, -2.0, seed).expect("valid generator arguments");
    build_graph(Chain::Eosio, GraphKind::Mtg, DEFAULT_MONTH, &traces).expect("single-month traces")
}
