//! Per-graph metrics and their monthly series.

mod components;
mod degree;
mod pearson;

pub use components::{count_scc, count_wcc};
pub use degree::{degree_histogram, fit_alpha, AlphaFit, DegreeHistogram, DegreeMode};
pub use pearson::{pearson, pearson_r, PearsonResult};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphKind, MonthlyGraph};
use crate::model::{Chain, InitiatorRole, MonthKey, Trace, TraceKind};

/// Graph metrics tracked as monthly series and scanned for outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TraceCount,
    AlphaIn,
    AlphaOut,
    AlphaTotal,
    PearsonR,
    Wcc,
    Scc,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::TraceCount,
        Metric::AlphaIn,
        Metric::AlphaOut,
        Metric::AlphaTotal,
        Metric::PearsonR,
        Metric::Wcc,
        Metric::Scc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TraceCount => "trace_count",
            Metric::AlphaIn => "alpha_in",
            Metric::AlphaOut => "alpha_out",
            Metric::AlphaTotal => "alpha_total",
            Metric::PearsonR => "pearson_r",
            Metric::Wcc => "wcc",
            Metric::Scc => "scc",
        }
    }

    pub fn degree_mode(self) -> Option<DegreeMode> {
        match self {
            Metric::AlphaIn => Some(DegreeMode::In),
            Metric::AlphaOut => Some(DegreeMode::Out),
            Metric::AlphaTotal => Some(DegreeMode::Total),
            _ => None,
        }
    }

    /// Whether the metric is defined for graphs of this chain and kind.
    pub fn applies_to(self, chain: Chain, kind: GraphKind) -> bool {
        !(self == Metric::Scc && chain == Chain::Bitcoin && kind == GraphKind::Mtg)
    }

    /// Evaluates the metric. `Ok(None)` when the value is undefined for this
    /// particular graph (too few degrees to fit, zero variance).
    pub fn evaluate(self, graph: &MonthlyGraph) -> Result<Option<f64>> {
        Ok(match self {
            Metric::TraceCount => Some(graph.trace_count() as f64),
            Metric::AlphaIn | Metric::AlphaOut | Metric::AlphaTotal => {
                let mode = self.degree_mode().expect("alpha metric");
                match fit_alpha(&degree_histogram(graph, mode)) {
                    Ok(fit) => Some(fit.alpha),
                    Err(Error::InsufficientPoints { .. }) => None,
                    Err(e) => return Err(e),
                }
            }
            Metric::PearsonR => pearson_r(graph).map(|p| p.r),
            Metric::Wcc => Some(count_wcc(graph) as f64),
            Metric::Scc => Some(count_scc(graph)? as f64),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStats {
    pub total: u64,
    pub counts: BTreeMap<TraceKind, u64>,
    /// Share of each present kind in the month's traces.
    pub ratios: BTreeMap<TraceKind, f64>,
    /// Per present kind, share of traces by initiator role (unknown bucket
    /// included).
    pub role_split: BTreeMap<TraceKind, BTreeMap<InitiatorRole, f64>>,
}

pub fn trace_stats<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> TraceStats {
    let mut counts: BTreeMap<TraceKind, u64> = BTreeMap::new();
    let mut roles: BTreeMap<TraceKind, BTreeMap<InitiatorRole, u64>> = BTreeMap::new();
    let mut total = 0u64;
    for t in traces {
        total += 1;
        *counts.entry(t.kind).or_default() += 1;
        *roles.entry(t.kind).or_default().entry(t.initiator_role).or_default() += 1;
    }
    let ratios = counts.iter().map(|(&k, &c)| (k, c as f64 / total as f64)).collect();
    let role_split = roles
        .into_iter()
        .map(|(kind, by_role)| {
            let n = counts[&kind] as f64;
            let split = InitiatorRole::ALL
                .into_iter()
                .map(|r| (r, by_role.get(&r).copied().unwrap_or(0) as f64 / n))
                .collect();
            (kind, split)
        })
        .collect();
    TraceStats {
        total,
        counts,
        ratios,
        role_split,
    }
}

/// Time-ordered values of one metric. Months are contiguous; undefined or
/// missing values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub chain: Chain,
    pub kind: GraphKind,
    pub metric: String,
    pub points: Vec<(MonthKey, Option<f64>)>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, month: MonthKey) -> Option<usize> {
        let first = self.points.first()?.0;
        let i = first.months_until(month);
        (i >= 0 && (i as usize) < self.points.len()).then_some(i as usize)
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.points.get(i).and_then(|p| p.1)
    }
}

/// Builds a gap-free series from per-month values in any order. Months
/// inside the span with no value are filled with `None`. `span` widens the
/// series beyond the months present.
pub fn assemble_series(
    chain: Chain,
    kind: GraphKind,
    metric: &str,
    values: impl IntoIterator<Item = (MonthKey, Option<f64>)>,
    span: Option<(MonthKey, MonthKey)>,
) -> Result<MetricSeries> {
    let mut by_month: BTreeMap<MonthKey, Option<f64>> = BTreeMap::new();
    for (m, v) in values {
        if by_month.insert(m, v).is_some() {
            return Err(Error::DuplicateMonth(m));
        }
    }
    let bounds = match (span, by_month.keys().next(), by_month.keys().next_back()) {
        (Some((a, b)), Some(&lo), Some(&hi)) => Some((a.min(lo), b.max(hi))),
        (Some(s), _, _) => Some(s),
        (None, Some(&lo), Some(&hi)) => Some((lo, hi)),
        _ => None,
    };
    let points = match bounds {
        Some((first, last)) => crate::model::month_range(first, last)?
            .into_iter()
            .map(|m| (m, by_month.get(&m).copied().flatten()))
            .collect(),
        None => Vec::new(),
    };
    Ok(MetricSeries {
        chain,
        kind,
        metric: metric.to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{month, trace};

    #[test]
    fn stats_ratios() {
        let mut ts = Vec::new();
        for (kind, n) in [
            (TraceKind::MoneyTransfer, 3),
            (TraceKind::AccountCreation, 1),
            (TraceKind::ContractInvocation, 6),
        ] {
            for _ in 0..n {
                let o = ts.len() as u32;
                ts.push(trace(kind, "a", "b", 0, o));
            }
        }
        let s = trace_stats(&ts);
        assert_eq!(s.total, 10);
        assert!((s.ratios[&TraceKind::MoneyTransfer] - 0.3).abs() < 1e-12);
        assert!((s.ratios[&TraceKind::AccountCreation] - 0.1).abs() < 1e-12);
        assert!((s.ratios[&TraceKind::ContractInvocation] - 0.6).abs() < 1e-12);
        assert_eq!(s.role_split[&TraceKind::MoneyTransfer][&InitiatorRole::User], 1.0);
        assert_eq!(s.role_split[&TraceKind::MoneyTransfer][&InitiatorRole::Unknown], 0.0);
    }

    #[test]
    fn stats_empty() {
        let s = trace_stats(&[]);
        assert_eq!(s.total, 0);
        assert!(s.ratios.is_empty());
    }

    #[test]
    fn series_examples() {
        let (a, b, c) = (month("2019-01"), month("2019-02"), month("2019-03"));
        let s = assemble_series(Chain::Eosio, GraphKind::Mtg, "x", [(a, Some(1.0)), (b, Some(2.0)), (c, Some(3.0))], None)
            .unwrap();
        assert_eq!(s.len(), 3);

        let s = assemble_series(Chain::Eosio, GraphKind::Mtg, "x", [(a, Some(1.0)), (c, Some(3.0))], None).unwrap();
        assert_eq!(s.points, vec![(a, Some(1.0)), (b, None), (c, Some(3.0))]);

        let s = assemble_series(Chain::Eosio, GraphKind::Mtg, "x", [(c, Some(3.0)), (a, Some(1.0)), (b, None)], None)
            .unwrap();
        assert_eq!(s.points.iter().map(|p| p.0).collect::<Vec<_>>(), [a, b, c]);
        assert_eq!(s.index_of(c), Some(2));
        assert_eq!(s.index_of(month("2018-12")), None);

        assert!(matches!(
            assemble_series(Chain::Eosio, GraphKind::Mtg, "x", [(a, Some(1.0)), (a, Some(2.0))], None),
            Err(Error::DuplicateMonth(_))
        ));

        let s = assemble_series(Chain::Eosio, GraphKind::Mtg, "x", [(b, Some(1.0))], Some((a, c))).unwrap();
        assert_eq!(s.points, vec![(a, None), (b, Some(1.0)), (c, None)]);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
    }
}
