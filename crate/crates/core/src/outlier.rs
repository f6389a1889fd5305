//! Sliding-window z-scores over metric series and attribution of outliers to
//! the nodes responsible for them.
//!
//! The z-score of month `i` compares its value with the seven values from
//! `i - 3` to `i + 3`. An outlier is attributed by repeatedly removing the
//! node selected by a metric-specific strategy from that month's graph and
//! recomputing the metric, with the six neighbouring months held fixed, until
//! the month no longer stands out.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, MonthlyGraph};
use crate::metrics::{DegreeMode, Metric, MetricSeries};
use crate::model::{Chain, MonthKey, NodeId};

/// Months on each side of the centre value.
pub const WINDOW_RADIUS: usize = 3;
pub const WINDOW_LEN: usize = 2 * WINDOW_RADIUS + 1;

/// A single deviating month in a 7-value window scores at most √6 ≈ 2.449,
/// so the default must sit below that to ever fire.
pub const DEFAULT_THRESHOLD: f64 = 2.0;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZScorePoint {
    pub month: MonthKey,
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub z: f64,
}

/// Mean, population standard deviation and z of `center` within `window`.
/// A window of identical values has `std = 0` and `z = 0`.
fn window_stats(window: &[f64], center: f64) -> (f64, f64, f64) {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    if window.iter().all(|&v| v == window[0]) {
        return (mean, 0.0, 0.0);
    }
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return (mean, 0.0, 0.0);
    }
    (mean, std, (center - mean) / std)
}

/// Window values around `index`, or `None` when the window runs off either
/// end of the series or holds an absent value.
fn window_values(series: &MetricSeries, index: usize) -> Option<[f64; WINDOW_LEN]> {
    if index < WINDOW_RADIUS || index + WINDOW_RADIUS >= series.len() {
        return None;
    }
    let mut out = [0.0; WINDOW_LEN];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = series.value(index - WINDOW_RADIUS + k)?;
    }
    Some(out)
}

pub fn zscore(series: &MetricSeries, index: usize) -> Option<ZScorePoint> {
    let window = window_values(series, index)?;
    let value = window[WINDOW_RADIUS];
    let (mean, std, z) = window_stats(&window, value);
    Some(ZScorePoint {
        month: series.points[index].0,
        value,
        mean,
        std,
        z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Peak,
    Trough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub month: MonthKey,
    pub z: f64,
    pub direction: Direction,
}

/// Months whose |z| reaches `threshold`.
pub fn detect(series: &MetricSeries, threshold: f64) -> Result<Vec<Detection>> {
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!("z threshold must be positive, got {threshold}")));
    }
    Ok((0..series.len())
        .filter_map(|i| zscore(series, i))
        .filter(|p| p.z.abs() >= threshold)
        .map(|p| Detection {
            month: p.month,
            z: p.z,
            direction: if p.z > 0.0 { Direction::Peak } else { Direction::Trough },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KillerDApp {
    DeFi,
    Exchange,
    Gambling,
    Game,
    Platform,
    Token,
    Tool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Misbehavior {
    Attack,
    ResourceManipulation,
    Spam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutlierCategory {
    KillerDApp(KillerDApp),
    Misbehavior(Misbehavior),
}

impl OutlierCategory {
    pub fn group(self) -> &'static str {
        match self {
            OutlierCategory::KillerDApp(_) => "KillerDApp",
            OutlierCategory::Misbehavior(_) => "Misbehavior",
        }
    }

    pub fn subcategory(self) -> &'static str {
        match self {
            OutlierCategory::KillerDApp(k) => match k {
                KillerDApp::DeFi => "DeFi",
                KillerDApp::Exchange => "Exchange",
                KillerDApp::Gambling => "Gambling",
                KillerDApp::Game => "Game",
                KillerDApp::Platform => "Platform",
                KillerDApp::Token => "Token",
                KillerDApp::Tool => "Tool",
            },
            OutlierCategory::Misbehavior(m) => match m {
                Misbehavior::Attack => "Attack",
                Misbehavior::ResourceManipulation => "ResourceManipulation",
                Misbehavior::Spam => "Spam",
            },
        }
    }

    pub fn parse(group: &str, subcategory: &str) -> Result<Self> {
        let squash = |s: &str| {
            s.chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase()
        };
        let bad = || Error::UnknownCategory(format!("{group}/{subcategory}"));
        let sub = squash(subcategory);
        match squash(group).as_str() {
            "killerdapp" => {
                let k = match sub.as_str() {
                    "defi" => KillerDApp::DeFi,
                    "exchange" => KillerDApp::Exchange,
                    "gambling" => KillerDApp::Gambling,
                    "game" => KillerDApp::Game,
                    "platform" => KillerDApp::Platform,
                    "token" => KillerDApp::Token,
                    "tool" => KillerDApp::Tool,
                    _ => return Err(bad()),
                };
                Ok(OutlierCategory::KillerDApp(k))
            }
            "misbehavior" | "misbehaviour" => {
                let m = match sub.as_str() {
                    "attack" => Misbehavior::Attack,
                    "resourcemanipulation" => Misbehavior::ResourceManipulation,
                    "spam" => Misbehavior::Spam,
                    _ => return Err(bad()),
                };
                Ok(OutlierCategory::Misbehavior(m))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for OutlierCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.group(), self.subcategory())
    }
}

impl Serialize for OutlierCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("OutlierCategory", 2)?;
        s.serialize_field("group", self.group())?;
        s.serialize_field("subcategory", self.subcategory())?;
        s.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierRecord {
    pub chain: Chain,
    pub graph_kind: GraphKind,
    pub metric: String,
    pub month: MonthKey,
    pub z: f64,
    pub direction: Direction,
    /// In removal order.
    pub responsible_nodes: Vec<NodeId>,
    pub iterations: usize,
    pub resolved: bool,
    /// z of the month after the last removal, when defined.
    pub final_z: Option<f64>,
    pub category: Option<OutlierCategory>,
}

/// Index of the node the strategy for `metric` removes next. Ties go to the
/// lexicographically smallest node id, which is the smallest index.
pub fn select_candidate(graph: &MonthlyGraph, metric: Metric, direction: Direction) -> Option<usize> {
    let score = |i: usize| -> u64 {
        match metric {
            Metric::TraceCount => graph.incident_trace_count(i),
            Metric::AlphaIn | Metric::AlphaOut | Metric::AlphaTotal => match direction {
                Direction::Peak => {
                    let mode = metric.degree_mode().expect("alpha metric");
                    mode.degree(graph, i) as u64
                }
                Direction::Trough => leaf_neighbor_count(graph, i),
            },
            Metric::PearsonR => (graph.in_degree(i) * graph.out_degree(i)) as u64,
            Metric::Wcc => neighbor_pairs(graph, i).0,
            Metric::Scc => neighbor_pairs(graph, i).1,
        }
    };
    (0..graph.node_count()).fold(None, |best: Option<(usize, u64)>, i| {
        let s = score(i);
        match best {
            Some((_, b)) if b >= s => best,
            _ => Some((i, s)),
        }
    })
    .map(|(i, _)| i)
}

/// Distinct neighbours of `i`, ignoring direction and self-loops.
fn neighbors(graph: &MonthlyGraph, i: usize) -> impl Iterator<Item = usize> + '_ {
    let (out, inc) = (graph.out_neighbors(i), graph.in_neighbors(i));
    // both lists are sorted: merge without duplicates
    let mut merged = Vec::with_capacity(out.len() + inc.len());
    let (mut a, mut b) = (0, 0);
    while a < out.len() || b < inc.len() {
        let next = match (out.get(a), inc.get(b)) {
            (Some(&x), Some(&y)) if x == y => {
                a += 1;
                b += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                a += 1;
                x
            }
            (Some(_), Some(&y)) | (None, Some(&y)) => {
                b += 1;
                y
            }
            (Some(&x), None) => {
                a += 1;
                x
            }
            (None, None) => unreachable!(),
        };
        if next != i {
            merged.push(next);
        }
    }
    merged.into_iter()
}

/// Neighbours whose only connection is to `i`.
fn leaf_neighbor_count(graph: &MonthlyGraph, i: usize) -> u64 {
    neighbors(graph, i)
        .filter(|&j| DegreeMode::Total.degree(graph, j) == 1)
        .count() as u64
}

/// `(one-way, two-way)` neighbour counts of `i`.
fn neighbor_pairs(graph: &MonthlyGraph, i: usize) -> (u64, u64) {
    let mut one_way = 0;
    let mut two_way = 0;
    for j in neighbors(graph, i) {
        let fwd = graph.edge_between(i, j).is_some();
        let back = graph.edge_between(j, i).is_some();
        if fwd && back {
            two_way += 1;
        } else {
            one_way += 1;
        }
    }
    (one_way, two_way)
}

fn replaced_center_z(window: &[f64; WINDOW_LEN], value: f64) -> f64 {
    let mut w = *window;
    w[WINDOW_RADIUS] = value;
    window_stats(&w, value).2
}

/// Iteratively removes responsible nodes from a private copy of `graph`
/// until the month's |z| drops below `threshold` or `max_iter` removals
/// have been made.
pub fn attribute(
    graph: &MonthlyGraph,
    metric: Metric,
    series: &MetricSeries,
    threshold: f64,
    max_iter: usize,
) -> Result<OutlierRecord> {
    let month = graph.month();
    if series.chain != graph.chain() || series.kind != graph.kind() || series.metric != metric.as_str() {
        return Err(Error::Contract(format!(
            "series {}/{}/{} does not describe a {}/{} graph measured by {metric}",
            series.chain,
            series.kind,
            series.metric,
            graph.chain(),
            graph.kind()
        )));
    }
    let not_flagged = || Error::NotFlagged {
        metric: metric.to_string(),
        month,
        threshold,
    };
    let index = series.index_of(month).ok_or_else(not_flagged)?;
    let window = window_values(series, index).ok_or_else(not_flagged)?;
    let z0 = window_stats(&window, window[WINDOW_RADIUS]).2;
    if z0.abs() < threshold {
        return Err(not_flagged());
    }
    if graph.is_empty() {
        return Err(Error::Attribution(format!("{} {} graph for {month} is empty", graph.chain(), graph.kind())));
    }
    let direction = if z0 > 0.0 { Direction::Peak } else { Direction::Trough };

    let mut work = graph.clone();
    let mut responsible = Vec::new();
    let mut final_z = None;
    let mut resolved = false;
    while responsible.len() < max_iter {
        let Some(c) = select_candidate(&work, metric, direction) else {
            break;
        };
        let id = work.node(c).clone();
        work = work.without_nodes(std::slice::from_ref(&id));
        responsible.push(id);
        final_z = metric.evaluate(&work)?.map(|v| replaced_center_z(&window, v));
        if final_z.is_some_and(|z| z.abs() < threshold) {
            resolved = true;
            break;
        }
    }

    Ok(OutlierRecord {
        chain: graph.chain(),
        graph_kind: graph.kind(),
        metric: metric.to_string(),
        month,
        z: z0,
        direction,
        iterations: responsible.len(),
        responsible_nodes: responsible,
        resolved,
        final_z,
        category: None,
    })
}

/// Recomputes the month's z after removing `nodes` from `graph`.
pub fn replay(graph: &MonthlyGraph, metric: Metric, series: &MetricSeries, nodes: &[NodeId]) -> Result<Option<f64>> {
    let index = series.index_of(graph.month()).ok_or_else(|| Error::NotFlagged {
        metric: metric.to_string(),
        month: graph.month(),
        threshold: 0.0,
    })?;
    let Some(window) = window_values(series, index) else {
        return Ok(None);
    };
    Ok(metric
        .evaluate(&graph.without_nodes(nodes))?
        .map(|v| replaced_center_z(&window, v)))
}

/// Manual outlier labels keyed by `(chain, identifier)`.
#[derive(Debug, Clone, Default)]
pub struct OutlierLabels {
    entries: HashMap<(Chain, String), OutlierCategory>,
}

#[derive(serde::Deserialize)]
struct LabelRow {
    chain: String,
    identifier: String,
    category: String,
    subcategory: String,
}

impl OutlierLabels {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = HashMap::new();
        for row in rdr.deserialize::<LabelRow>() {
            let row = row?;
            let chain: Chain = row.chain.parse()?;
            entries.insert(
                (chain, row.identifier),
                OutlierCategory::parse(&row.category, &row.subcategory)?,
            );
        }
        Ok(OutlierLabels { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    pub fn get(&self, node: &NodeId) -> Option<OutlierCategory> {
        self.entries.get(&(node.chain(), node.identifier().to_string())).copied()
    }
}

/// Category of the first responsible node that carries a label.
pub fn classify(mut record: OutlierRecord, labels: &OutlierLabels) -> OutlierRecord {
    record.category = record.responsible_nodes.iter().find_map(|n| labels.get(n));
    record
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(Direction::Peak),
            "trough" => Ok(Direction::Trough),
            _ => Err(Error::Parse(format!("unknown direction `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::assemble_series;
    use crate::model::month_range;
    use crate::testutil::{graph, month};
    use proptest::prelude::*;

    fn series(values: &[f64]) -> MetricSeries {
        let months = month_range(month("2019-01"), month("2030-12")).unwrap();
        assemble_series(
            Chain::Eosio,
            GraphKind::Mtg,
            "trace_count",
            months.into_iter().zip(values.iter().map(|&v| Some(v))),
            None,
        )
        .unwrap()
    }

    #[test]
    fn spike_z() {
        let s = series(&[1.0, 1.0, 1.0, 8.0, 1.0, 1.0, 1.0]);
        let p = zscore(&s, 3).unwrap();
        assert!((p.mean - 2.0).abs() < 1e-12);
        assert!((p.std - 6f64.sqrt()).abs() < 1e-12);
        assert!((p.z - 6.0 / 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_and_boundary() {
        let s = series(&[0.1; 7]);
        assert_eq!(zscore(&s, 3).unwrap().z, 0.0);
        assert!(zscore(&s, 1).is_none());
        assert!(zscore(&s, 4).is_none());
        assert!(detect(&s, 2.0).unwrap().is_empty());
    }

    #[test]
    fn absent_values_block_window() {
        let mut s = series(&[1.0, 1.0, 1.0, 8.0, 1.0, 1.0, 1.0]);
        s.points[0].1 = None;
        assert!(zscore(&s, 3).is_none());
    }

    #[test]
    fn detect_examples() {
        let d = detect(&series(&[1.0, 1.0, 1.0, 8.0, 1.0, 1.0, 1.0]), 2.0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].direction, Direction::Peak);
        assert!((d[0].z - 2.449489742783178).abs() < 1e-12);

        let d = detect(&series(&[1.0, 1.0, 1.0, -6.0, 1.0, 1.0, 1.0]), 2.0).unwrap();
        assert_eq!(d[0].direction, Direction::Trough);

        // the largest single-spike z is √6, below 2.5
        assert!(detect(&series(&[1.0, 1.0, 1.0, 1e9, 1.0, 1.0, 1.0]), 2.5).unwrap().is_empty());
        assert!(matches!(detect(&series(&[1.0]), 0.0), Err(Error::Parameter(_))));
    }

    fn star_month(supernodes: &[&str], spokes: usize, base: &[(&str, &str)]) -> MonthlyGraph {
        let mut edges: Vec<(String, String)> = base.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        for s in supernodes {
            for k in 0..spokes {
                edges.push((s.to_string(), format!("{s}-leaf{k}")));
            }
        }
        let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        graph(&refs)
    }

    fn flat_with(center: f64, baseline: f64) -> MetricSeries {
        let mut v = vec![baseline; 7];
        v[3] = center;
        let mut s = series(&v);
        // the graphs in these tests are dated 1970-01
        let start = month("1969-10");
        s.points = month_range(start, month("1970-04"))
            .unwrap()
            .into_iter()
            .zip(v.into_iter().map(Some))
            .collect();
        s
    }

    #[test]
    fn attribute_single_star() {
        let base = [("a", "b"), ("c", "d"), ("e", "f")];
        let g = star_month(&["S"], 1000, &base);
        let s = flat_with(g.trace_count() as f64, 3.0);
        let r = attribute(&g, Metric::TraceCount, &s, 2.0, 50).unwrap();
        assert_eq!(r.responsible_nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>(), ["S"]);
        assert_eq!(r.iterations, 1);
        assert!(r.resolved);
        assert_eq!(r.final_z, Some(0.0));
        let again = replay(&g, Metric::TraceCount, &s, &r.responsible_nodes).unwrap().unwrap();
        assert!(again.abs() < 2.0);
    }

    #[test]
    fn attribute_two_stars_in_order() {
        let base = [("a", "b"), ("c", "d")];
        let g = star_month(&["S2", "S1"], 500, &base);
        let s = flat_with(g.trace_count() as f64, 2.0);
        let r = attribute(&g, Metric::TraceCount, &s, 2.0, 50).unwrap();
        let ids: Vec<_> = r.responsible_nodes.iter().map(|n| n.to_string()).collect();
        assert_eq!(ids, ["S1", "S2"]);
        assert!(r.resolved);
    }

    #[test]
    fn attribute_requires_flagged_month() {
        let g = graph(&[("a", "b")]);
        let s = flat_with(1.0, 1.0);
        assert!(matches!(
            attribute(&g, Metric::TraceCount, &s, 2.0, 50),
            Err(Error::NotFlagged { .. })
        ));
    }

    #[test]
    fn attribute_empty_graph() {
        let g = graph(&[]);
        let s = flat_with(0.0, 5.0);
        assert!(matches!(
            attribute(&g, Metric::TraceCount, &s, 2.0, 50),
            Err(Error::Attribution(_))
        ));
    }

    #[test]
    fn max_iter_leaves_unresolved() {
        let g = star_month(&["S1", "S2"], 100, &[("a", "b")]);
        let s = flat_with(g.trace_count() as f64, 1.0);
        let r = attribute(&g, Metric::TraceCount, &s, 2.0, 1).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.resolved);
    }

    #[test]
    fn strategies() {
        // hub h: two-way with x, one-way to y and z; leaves y and z
        let g = graph(&[("h", "x"), ("x", "h"), ("h", "y"), ("h", "z"), ("p", "q")]);
        let name = |i: Option<usize>| g.node(i.unwrap()).to_string();
        assert_eq!(name(select_candidate(&g, Metric::Wcc, Direction::Peak)), "h");
        assert_eq!(name(select_candidate(&g, Metric::Scc, Direction::Peak)), "h");
        assert_eq!(name(select_candidate(&g, Metric::PearsonR, Direction::Peak)), "h");
        assert_eq!(name(select_candidate(&g, Metric::AlphaIn, Direction::Peak)), "h");
        assert_eq!(name(select_candidate(&g, Metric::AlphaOut, Direction::Trough)), "h");
        assert_eq!(neighbor_pairs(&g, 0), (2, 1));
        // tie between p and q on the leaf strategy restricted to that pair
        let g = graph(&[("q", "p")]);
        assert_eq!(g.node(select_candidate(&g, Metric::AlphaOut, Direction::Trough).unwrap()).to_string(), "p");
    }

    #[test]
    fn classify_join() {
        let labels = OutlierLabels::from_reader(
            "chain,identifier,category,subcategory\neos,eidosonecoin,Misbehavior,Resource Manipulation\n".as_bytes(),
        )
        .unwrap();
        let node = |s: &str| NodeId::regular(Chain::Eosio, s).unwrap();
        let rec = OutlierRecord {
            chain: Chain::Eosio,
            graph_kind: GraphKind::Mtg,
            metric: "trace_count".into(),
            month: month("2019-11"),
            z: 2.4,
            direction: Direction::Peak,
            responsible_nodes: vec![node("eidosonecoin")],
            iterations: 1,
            resolved: true,
            final_z: Some(0.0),
            category: None,
        };
        let c = classify(rec.clone(), &labels);
        assert_eq!(c.category, Some(OutlierCategory::Misbehavior(Misbehavior::ResourceManipulation)));

        let mut other = rec.clone();
        other.responsible_nodes = vec![node("someone")];
        assert_eq!(classify(other, &labels).category, None);
        let mut empty = rec;
        empty.responsible_nodes.clear();
        assert_eq!(classify(empty, &labels).category, None);

        assert!(OutlierLabels::from_reader("chain,identifier,category,subcategory\neos,x,Weird,Thing\n".as_bytes()).is_err());
        assert!(OutlierLabels::from_reader("chain,identifier\neos,x\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn affine_invariance(
            values in proptest::collection::vec(-1e3f64..1e3, 7..20),
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
        ) {
            let s = series(&values);
            let t = series(&values.iter().map(|v| a * v + b).collect::<Vec<_>>());
            let neg = series(&values.iter().map(|v| -a * v + b).collect::<Vec<_>>());
            for i in 0..values.len() {
                match (zscore(&s, i), zscore(&t, i), zscore(&neg, i)) {
                    (Some(p), Some(q), Some(r)) => {
                        prop_assert!((p.z - q.z).abs() < 1e-6, "{} vs {}", p.z, q.z);
                        prop_assert!((p.z + r.z).abs() < 1e-6);
                    }
                    (None, None, None) => prop_assert!(i < 3 || i + 3 >= values.len()),
                    _ => prop_assert!(false, "definedness differs at {}", i),
                }
            }
        }

        #[test]
        fn window_locality(values in proptest::collection::vec(-1e3f64..1e3, 12..20), noise in -1e3f64..1e3) {
            let s = series(&values);
            let i = 5usize;
            let mut changed = values.clone();
            changed[0] += noise;
            for v in changed.iter_mut().skip(i + 4) {
                *v += noise;
            }
            prop_assert_eq!(zscore(&s, i), zscore(&series(&changed), i));
        }
    }
}
