use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::MonthlyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    In,
    Out,
    Total,
}

impl DegreeMode {
    pub const ALL: [DegreeMode; 3] = [DegreeMode::In, DegreeMode::Out, DegreeMode::Total];

    pub fn as_str(self) -> &'static str {
        match self {
            DegreeMode::In => "in",
            DegreeMode::Out => "out",
            DegreeMode::Total => "total",
        }
    }

    pub fn degree(self, graph: &MonthlyGraph, i: usize) -> usize {
        match self {
            DegreeMode::In => graph.in_degree(i),
            DegreeMode::Out => graph.out_degree(i),
            DegreeMode::Total => graph.in_degree(i) + graph.out_degree(i),
        }
    }
}

impl fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DegreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(DegreeMode::In),
            "out" => Ok(DegreeMode::Out),
            "total" => Ok(DegreeMode::Total),
            _ => Err(Error::Parse(format!("unknown degree mode `{s}`"))),
        }
    }
}

/// Proportion of nodes per observed degree. Zero-degree nodes count toward
/// `node_count` but produce no point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeHistogram {
    pub mode: DegreeMode,
    pub points: Vec<(u64, f64)>,
    pub node_count: usize,
}

impl DegreeHistogram {
    /// Histogram from raw per-node degrees.
    pub fn from_degrees(mode: DegreeMode, degrees: impl IntoIterator<Item = u64>) -> Self {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let mut node_count = 0usize;
        for d in degrees {
            node_count += 1;
            if d > 0 {
                *counts.entry(d).or_default() += 1;
            }
        }
        let n = node_count as f64;
        DegreeHistogram {
            mode,
            points: counts.into_iter().map(|(d, c)| (d, c as f64 / n)).collect(),
            node_count,
        }
    }
}

/// Degrees count distinct aggregated edges, not trace multiplicity.
pub fn degree_histogram(graph: &MonthlyGraph, mode: DegreeMode) -> DegreeHistogram {
    DegreeHistogram::from_degrees(mode, (0..graph.node_count()).map(|i| mode.degree(graph, i) as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaFit {
    /// Signed log-log slope.
    pub alpha: f64,
    pub intercept: f64,
    pub point_count: usize,
}

/// Ordinary least squares of `log10(proportion)` on `log10(degree)`.
pub fn fit_alpha(hist: &DegreeHistogram) -> Result<AlphaFit> {
    let n = hist.points.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { found: n });
    }
    let xs: Vec<f64> = hist.points.iter().map(|&(d, _)| (d as f64).log10()).collect();
    let ys: Vec<f64> = hist.points.iter().map(|&(_, p)| p.log10()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let alpha = sxy / sxx;
    Ok(AlphaFit {
        alpha,
        intercept: my - alpha * mx,
        point_count: n,
    })
}
