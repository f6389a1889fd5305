//! Rule-based detection of accounts that advertise through dust transfers,
//! and creation family trees over the account-creation graph.
//!
//! An account `N` is flagged for a month when
//!
//! * R1: its average transferred amount per distinct recipient is at most `x`,
//! * R2: it sent at most `y` transfers to every recipient,
//! * R3: more than `z` recipients sent it neither a transfer nor an
//!   invocation in the same month, and
//! * R4: at least `z` of those silent recipients received one identical memo.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphKind, MonthlyGraph};
use crate::model::{MonthKey, NodeId, Trace, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpamParams {
    /// Maximum average amount per recipient, in native units.
    pub x: Decimal,
    /// Maximum transfers to any single recipient.
    pub y: u64,
    /// Minimum number of silent recipients.
    pub z: u64,
    pub require_memo: bool,
}

impl Default for SpamParams {
    fn default() -> Self {
        SpamParams {
            x: Decimal::new(1, 3),
            y: 30,
            z: 500,
            require_memo: true,
        }
    }
}

impl SpamParams {
    pub fn validate(&self) -> Result<()> {
        if self.x <= Decimal::ZERO {
            return Err(Error::Parameter(format!("spam x must be positive, got {}", self.x)));
        }
        if self.y < 1 {
            return Err(Error::Parameter("spam y must be at least 1".into()));
        }
        if self.z < 1 {
            return Err(Error::Parameter("spam z must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SpamRule {
    R1,
    R2,
    R3,
    R4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoGroup {
    pub memo: String,
    pub recipient_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpamVerdict {
    pub account: NodeId,
    pub month: MonthKey,
    pub recipients: u64,
    pub non_repliers: u64,
    pub avg_amount: Decimal,
    pub max_tm_per_recipient: u64,
    /// Memos sent to silent recipients, largest group first.
    pub memo_groups: Vec<MemoGroup>,
    pub rules_passed: BTreeSet<SpamRule>,
}

/// Scans one month. `traces` supplies the memos; amounts, counts and replies
/// come from the two graphs. Verdicts are sorted by account.
pub fn scan_spammers(
    mtg: &MonthlyGraph,
    cig: &MonthlyGraph,
    traces: &[Trace],
    params: &SpamParams,
) -> Result<Vec<SpamVerdict>> {
    params.validate()?;
    if mtg.kind() != GraphKind::Mtg || cig.kind() != GraphKind::Cig {
        return Err(Error::Contract(format!(
            "spam scan expects an MTG and a CIG, got {} and {}",
            mtg.kind(),
            cig.kind()
        )));
    }
    if mtg.chain() != cig.chain() || mtg.month() != cig.month() {
        return Err(Error::Contract(format!(
            "spam scan over {} {} MTG and {} {} CIG",
            mtg.chain(),
            mtg.month(),
            cig.chain(),
            cig.month()
        )));
    }
    let month = mtg.month();

    // R3 needs more than z silent recipients, so fewer recipients can never
    // qualify.
    let candidates: Vec<usize> = (0..mtg.node_count())
        .filter(|&i| mtg.out_degree(i) as u64 > params.z)
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let candidate_ids: HashSet<&NodeId> = candidates.iter().map(|&i| mtg.node(i)).collect();
    let mut memos_by_source: HashMap<&NodeId, Vec<&Trace>> = HashMap::new();
    for t in traces {
        if t.chain != mtg.chain() || t.month() != month {
            return Err(Error::Contract(format!(
                "trace {}#{} ({} {}) passed to the {} {} spam scan",
                t.tx_id,
                t.ordinal,
                t.chain,
                t.month(),
                mtg.chain(),
                month
            )));
        }
        if t.kind == TraceKind::MoneyTransfer && t.memo.is_some() && candidate_ids.contains(&t.source) {
            memos_by_source.entry(&t.source).or_default().push(t);
        }
    }

    let mut verdicts = Vec::new();
    for n in candidates {
        let account = mtg.node(n);
        let recipients = mtg.out_neighbors(n);
        let mut total = Decimal::ZERO;
        let mut max_tm = 0;
        for &r in recipients {
            let e = mtg.edge_between(n, r).expect("adjacency without edge");
            total += e.weight_sum;
            max_tm = max_tm.max(e.trace_count);
        }
        let avg_amount = total / Decimal::from(recipients.len() as u64);
        let cig_account = cig.index_of(account);
        let silent: HashSet<&NodeId> = recipients
            .iter()
            .filter(|&&r| {
                let sent_back = mtg.edge_between(r, n).is_some();
                let invoked_back = cig_account
                    .zip(cig.index_of(mtg.node(r)))
                    .is_some_and(|(a, ri)| cig.edge_between(ri, a).is_some());
                !sent_back && !invoked_back
            })
            .map(|&r| mtg.node(r))
            .collect();

        let mut groups: BTreeMap<&str, HashSet<&NodeId>> = BTreeMap::new();
        for t in memos_by_source.get(account).into_iter().flatten() {
            if silent.contains(&t.target) {
                let memo = t.memo.as_deref().unwrap_or_default();
                groups.entry(memo).or_default().insert(&t.target);
            }
        }
        let mut memo_groups: Vec<MemoGroup> = groups
            .into_iter()
            .map(|(memo, rs)| MemoGroup {
                memo: memo.to_string(),
                recipient_count: rs.len() as u64,
            })
            .collect();
        // stable sort keeps memo order within equal counts
        memo_groups.sort_by_key(|g| std::cmp::Reverse(g.recipient_count));

        let non_repliers = silent.len() as u64;
        let mut rules_passed = BTreeSet::new();
        if avg_amount <= params.x {
            rules_passed.insert(SpamRule::R1);
        }
        if max_tm <= params.y {
            rules_passed.insert(SpamRule::R2);
        }
        if non_repliers > params.z {
            rules_passed.insert(SpamRule::R3);
        }
        if memo_groups.first().is_some_and(|g| g.recipient_count >= params.z) {
            rules_passed.insert(SpamRule::R4);
        }
        let required = [SpamRule::R1, SpamRule::R2, SpamRule::R3];
        let flagged = required.iter().all(|r| rules_passed.contains(r))
            && (!params.require_memo || rules_passed.contains(&SpamRule::R4));
        if flagged {
            verdicts.push(SpamVerdict {
                account: account.clone(),
                month,
                recipients: recipients.len() as u64,
                non_repliers,
                avg_amount,
                max_tm_per_recipient: max_tm,
                memo_groups,
                rules_passed,
            });
        }
    }
    Ok(verdicts)
}

/// Number of accounts first flagged in each month.
pub fn spam_timeline<'a>(verdicts: impl IntoIterator<Item = &'a SpamVerdict>) -> BTreeMap<MonthKey, usize> {
    let mut first: HashMap<&NodeId, MonthKey> = HashMap::new();
    for v in verdicts {
        first
            .entry(&v.account)
            .and_modify(|m| *m = (*m).min(v.month))
            .or_insert(v.month);
    }
    let mut timeline = BTreeMap::new();
    for month in first.into_values() {
        *timeline.entry(month).or_insert(0) += 1;
    }
    timeline
}

/// Creation forest over the union of account-creation graphs.
#[derive(Debug, Clone)]
pub struct FamilyTree {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    flagged: Vec<bool>,
    subtree_size: Vec<usize>,
    subtree_flagged: Vec<usize>,
}

impl FamilyTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn roots(&self) -> impl Iterator<Item = &NodeId> + '_ {
        self.nodes
            .iter()
            .zip(&self.parent)
            .filter(|(_, p)| p.is_none())
            .map(|(n, _)| n)
    }

    pub fn parent_of(&self, node: &NodeId) -> Option<&NodeId> {
        let i = *self.index.get(node)?;
        self.parent[i].map(|p| &self.nodes[p])
    }

    pub fn children_of(&self, node: &NodeId) -> Vec<&NodeId> {
        self.index
            .get(node)
            .map(|&i| self.children[i].iter().map(|&c| &self.nodes[c]).collect())
            .unwrap_or_default()
    }

    pub fn is_flagged(&self, node: &NodeId) -> bool {
        self.index.get(node).is_some_and(|&i| self.flagged[i])
    }

    /// Size of the subtree rooted at `node`, the node itself included.
    pub fn subtree_size(&self, node: &NodeId) -> Option<usize> {
        self.index.get(node).map(|&i| self.subtree_size[i])
    }

    /// Flagged share of the subtree rooted at `node`, the node itself
    /// included.
    pub fn spam_proportion(&self, node: &NodeId) -> Option<f64> {
        self.index
            .get(node)
            .map(|&i| self.subtree_flagged[i] as f64 / self.subtree_size[i] as f64)
    }

    /// Edge list `parent,child,flagged` in node order, where `flagged`
    /// refers to the child.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["parent", "child", "flagged"])?;
        for (c, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                out.write_record([
                    self.nodes[*p].to_string(),
                    self.nodes[c].to_string(),
                    self.flagged[c].to_string(),
                ])?;
            }
        }
        out.flush().map_err(|e| Error::io("<family tree>", e))?;
        Ok(())
    }
}

/// Builds the creation forest from account-creation graphs of any number of
/// months. Flagged accounts that never appear in a creation get a singleton
/// tree of their own.
pub fn build_family_tree<'a>(
    acgs: impl IntoIterator<Item = &'a MonthlyGraph>,
    flagged: &BTreeSet<NodeId>,
) -> Result<FamilyTree> {
    let mut ids: BTreeSet<NodeId> = flagged.clone();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for g in acgs {
        if g.kind() != GraphKind::Acg {
            return Err(Error::Contract(format!("family tree built from a {} graph", g.kind())));
        }
        for i in 0..g.node_count() {
            ids.insert(g.node(i).clone());
        }
        for e in g.edge_refs() {
            edges.push((g.node(e.source).clone(), g.node(e.target).clone()));
        }
    }
    let nodes: Vec<NodeId> = ids.into_iter().collect();
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let n = nodes.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for (s, t) in &edges {
        let (s, t) = (index[s], index[t]);
        match parent[t] {
            Some(p) if p != s => {
                return Err(Error::Data(format!(
                    "{} created by both {} and {}",
                    nodes[t], nodes[p], nodes[s]
                )))
            }
            _ => parent[t] = Some(s),
        }
    }
    let mut children = vec![Vec::new(); n];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(c);
        }
    }

    // Pre-order walk from the roots; anything left unvisited sits on a cycle.
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    stack.reverse();
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[v].iter().rev());
    }
    if order.len() != n {
        let mut seen = vec![false; n];
        for &v in &order {
            seen[v] = true;
        }
        let stuck = (0..n).find(|&i| !seen[i]).expect("unvisited node");
        return Err(Error::Data(format!("creation cycle through {}", nodes[stuck])));
    }

    let is_flagged: Vec<bool> = nodes.iter().map(|id| flagged.contains(id)).collect();
    let mut subtree_size = vec![1usize; n];
    let mut subtree_flagged: Vec<usize> = is_flagged.iter().map(|&f| f as usize).collect();
    for &v in order.iter().rev() {
        if let Some(p) = parent[v] {
            subtree_size[p] += subtree_size[v];
            subtree_flagged[p] += subtree_flagged[v];
        }
    }
    Ok(FamilyTree {
        nodes,
        index,
        parent,
        children,
        flagged: is_flagged,
        subtree_size,
        subtree_flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::{Chain, InitiatorRole};
    use crate::testutil::{month, EPOCH_MONTH};
    use proptest::prelude::*;

    fn id(s: &str) -> NodeId {
        NodeId::regular(Chain::Eosio, s).unwrap()
    }

    fn tm(a: &str, b: &str, amount: Decimal, memo: Option<&str>, ordinal: u32) -> Trace {
        Trace {
            chain: Chain::Eosio,
            kind: TraceKind::MoneyTransfer,
            source: id(a),
            target: id(b),
            weight: amount,
            timestamp: 100,
            memo: memo.map(str::to_string),
            initiator_role: InitiatorRole::User,
            tx_id: format!("s{ordinal}"),
            ordinal,
        }
    }

    fn scan(traces: &[Trace], params: &SpamParams) -> Vec<SpamVerdict> {
        let m = month(EPOCH_MONTH);
        let mts: Vec<&Trace> = traces.iter().filter(|t| t.kind == TraceKind::MoneyTransfer).collect();
        let cis: Vec<&Trace> = traces.iter().filter(|t| t.kind == TraceKind::ContractInvocation).collect();
        let mtg = build_graph(Chain::Eosio, GraphKind::Mtg, m, mts).unwrap();
        let cig = build_graph(Chain::Eosio, GraphKind::Cig, m, cis).unwrap();
        scan_spammers(&mtg, &cig, traces, params).unwrap()
    }

    fn campaign(sender: &str, recipients: usize, amount: Decimal, memo: &str) -> Vec<Trace> {
        (0..recipients)
            .map(|i| tm(sender, &format!("{sender}.r{i}"), amount, Some(memo), i as u32))
            .collect()
    }

    fn dust() -> Decimal {
        Decimal::new(1, 4)
    }

    #[test]
    fn planted_spammer_flagged() {
        let v = scan(&campaign("spam", 600, dust(), "WIN BIG url"), &SpamParams::default());
        assert_eq!(v.len(), 1);
        let v = &v[0];
        assert_eq!(v.account, id("spam"));
        assert_eq!(v.recipients, 600);
        assert_eq!(v.non_repliers, 600);
        assert_eq!(v.avg_amount, dust());
        assert_eq!(v.max_tm_per_recipient, 1);
        assert_eq!(v.memo_groups[0].recipient_count, 600);
        assert_eq!(v.rules_passed.len(), 4);
    }

    #[test]
    fn large_amounts_fail_r1() {
        let v = scan(&campaign("rich", 600, Decimal::TEN, "hi"), &SpamParams::default());
        assert!(v.is_empty());
    }

    #[test]
    fn too_few_recipients_fail_r3() {
        assert!(scan(&campaign("small", 400, dust(), "hi"), &SpamParams::default()).is_empty());
    }

    #[test]
    fn replies_and_repeats_count() {
        let mut ts = campaign("spam", 510, dust(), "ad");
        // 20 recipients answer, leaving 490 silent
        for i in 0..10 {
            ts.push(tm(&format!("spam.r{i}"), "spam", dust(), None, 1000 + i));
        }
        for i in 10..20u32 {
            let mut t = tm(&format!("spam.r{i}"), "spam", Decimal::ONE, None, 2000 + i);
            t.kind = TraceKind::ContractInvocation;
            ts.push(t);
        }
        let loose = SpamParams {
            z: 400,
            ..SpamParams::default()
        };
        let v = scan(&ts, &loose);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].non_repliers, 490);
        assert!(scan(&ts, &SpamParams::default()).is_empty());

        // 31 transfers to one recipient break R2
        let mut ts = campaign("spam", 600, dust(), "ad");
        for k in 0..30 {
            ts.push(tm("spam", "spam.r0", dust(), Some("ad"), 5000 + k));
        }
        assert!(scan(&ts, &SpamParams::default()).is_empty());
    }

    #[test]
    fn memo_requirement() {
        let mut ts = campaign("spam", 300, dust(), "a");
        ts.extend((300..600).map(|i| tm("spam", &format!("spam.r{i}"), dust(), Some("b"), i)));
        assert!(scan(&ts, &SpamParams::default()).is_empty());
        let no_memo = SpamParams {
            require_memo: false,
            ..SpamParams::default()
        };
        let v = scan(&ts, &no_memo);
        assert_eq!(v.len(), 1);
        assert!(!v[0].rules_passed.contains(&SpamRule::R4));
        assert_eq!(v[0].memo_groups.len(), 2);
    }

    #[test]
    fn params_validated() {
        for bad in [
            SpamParams {
                x: Decimal::ZERO,
                ..SpamParams::default()
            },
            SpamParams {
                y: 0,
                ..SpamParams::default()
            },
            SpamParams {
                z: 0,
                ..SpamParams::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn mismatched_graphs_rejected() {
        let m = month(EPOCH_MONTH);
        let mtg = MonthlyGraph::empty(Chain::Eosio, GraphKind::Mtg, m);
        let cig = MonthlyGraph::empty(Chain::Eosio, GraphKind::Cig, m.succ());
        assert!(matches!(
            scan_spammers(&mtg, &cig, &[], &SpamParams::default()),
            Err(Error::Contract(_))
        ));
    }

    fn verdict(account: &str, m: &str) -> SpamVerdict {
        SpamVerdict {
            account: id(account),
            month: month(m),
            recipients: 0,
            non_repliers: 0,
            avg_amount: Decimal::ZERO,
            max_tm_per_recipient: 0,
            memo_groups: Vec::new(),
            rules_passed: BTreeSet::new(),
        }
    }

    #[test]
    fn timeline_counts_first_month() {
        let vs = [verdict("a", "2019-04"), verdict("a", "2019-03"), verdict("b", "2019-04")];
        let t = spam_timeline(&vs);
        assert_eq!(t.get(&month("2019-03")), Some(&1));
        assert_eq!(t.get(&month("2019-04")), Some(&1));
        assert!(spam_timeline(&[]).is_empty());
    }

    fn acg(edges: &[(&str, &str)]) -> MonthlyGraph {
        let ts: Vec<Trace> = edges
            .iter()
            .enumerate()
            .map(|(i, (a, b))| crate::testutil::trace(TraceKind::AccountCreation, a, b, 0, i as u32))
            .collect();
        build_graph(Chain::Eosio, GraphKind::Acg, month(EPOCH_MONTH), &ts).unwrap()
    }

    #[test]
    fn family_tree_proportions() {
        let g = acg(&[("root", "a"), ("a", "b"), ("a", "c")]);
        let flagged: BTreeSet<NodeId> = [id("b"), id("c")].into();
        let tree = build_family_tree([&g], &flagged).unwrap();
        assert!((tree.spam_proportion(&id("a")).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(tree.roots().collect::<Vec<_>>(), [&id("root")]);
        assert_eq!(tree.parent_of(&id("b")), Some(&id("a")));

        let tree = build_family_tree([&g], &BTreeSet::new()).unwrap();
        assert!(tree.nodes().iter().all(|n| tree.spam_proportion(n) == Some(0.0)));

        let chain = acg(&[("root", "a"), ("a", "b"), ("b", "c")]);
        let tree = build_family_tree([&chain], &[id("c")].into()).unwrap();
        assert_eq!(tree.spam_proportion(&id("root")), Some(0.25));
        assert_eq!(tree.subtree_size(&id("root")), Some(4));
    }

    #[test]
    fn family_tree_across_months_and_errors() {
        let m1 = acg(&[("root", "a")]);
        let m2 = acg(&[("x", "a")]);
        assert!(matches!(
            build_family_tree([&m1, &m2], &BTreeSet::new()),
            Err(Error::Data(_))
        ));
        let cyc = acg(&[("a", "b"), ("b", "a")]);
        assert!(matches!(build_family_tree([&cyc], &BTreeSet::new()), Err(Error::Data(_))));

        let tree = build_family_tree([&m1], &[id("loner")].into()).unwrap();
        assert_eq!(tree.spam_proportion(&id("loner")), Some(1.0));
        let mut buf = Vec::new();
        tree.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "parent,child,flagged\nroot,a,false\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn detector_is_monotone(
            sizes in proptest::collection::vec((5usize..40, 0u32..4, 0usize..5), 1..6),
            x in 1i64..50, y in 1u64..4, z in 2u64..30,
            dx in 0i64..50, dy in 0u64..3, dz in 0u64..2,
        ) {
            // small accounts with varied amounts, repeats and replies
            let mut ts = Vec::new();
            let mut ord = 0;
            for (k, &(recipients, repeats, replies)) in sizes.iter().enumerate() {
                let s = format!("s{k}");
                for r in 0..recipients {
                    for _ in 0..=repeats.min(r as u32 % 3) {
                        ts.push(tm(&s, &format!("{s}.r{r}"), Decimal::new((k as i64 + 1) * 7, 4), Some("m"), ord));
                        ord += 1;
                    }
                }
                for r in 0..replies {
                    ts.push(tm(&format!("{s}.r{r}"), &s, Decimal::ONE, None, ord));
                    ord += 1;
                }
            }
            let base = SpamParams { x: Decimal::new(x, 4), y, z, require_memo: true };
            let looser = SpamParams {
                x: Decimal::new(x + dx, 4),
                y: y + dy,
                z: z - dz.min(z - 1),
                require_memo: true,
            };
            let strict: BTreeSet<NodeId> = scan(&ts, &base).into_iter().map(|v| v.account).collect();
            let loose: BTreeSet<NodeId> = scan(&ts, &looser).into_iter().map(|v| v.account).collect();
            prop_assert!(strict.is_subset(&loose));
        }
    }
}
