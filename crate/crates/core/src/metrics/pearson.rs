use serde::Serialize;

use crate::graph::MonthlyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PearsonResult {
    pub r: f64,
    pub n: usize,
}

/// Population Pearson correlation of paired samples. `None` with fewer than
/// two pairs or when either side has zero variance.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between in-degree and out-degree across all nodes of the
/// graph, zero-degree and surrogate nodes included.
pub fn pearson_r(graph: &MonthlyGraph) -> Option<PearsonResult> {
    let pairs: Vec<(f64, f64)> = (0..graph.node_count())
        .map(|i| (graph.in_degree(i) as f64, graph.out_degree(i) as f64))
        .collect();
    pearson(&pairs).map(|r| PearsonResult { r, n: pairs.len() })
}
