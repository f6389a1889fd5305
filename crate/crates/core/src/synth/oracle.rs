//! Slow, obviously-correct reference implementations.
//!
//! They work on plain edge lists over nodes `0..n` and raw traces, and share
//! no code with the graph and metric modules they are used to check. Each
//! refuses instances above [`ORACLE_LIMIT`] nodes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rust_decimal::Decimal;

use crate::error::{Error, Result};
use crate::model::{NodeId, Trace, TraceKind};
use crate::spam::SpamParams;

pub const ORACLE_LIMIT: usize = 1000;

fn check_size(size: usize) -> Result<()> {
    if size > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            size,
            limit: ORACLE_LIMIT,
        });
    }
    Ok(())
}

fn check_edges(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    check_size(n)?;
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::Parameter(format!("edge ({a}, {b}) outside 0..{n}")));
    }
    Ok(())
}

/// Components of the undirected version of the graph, by breadth-first
/// search.
pub fn brute_wcc(n: usize, edges: &[(usize, usize)]) -> Result<usize> {
    check_edges(n, edges)?;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    Ok(count)
}

/// Classes of mutual reachability, from the full reachability matrix.
pub fn brute_scc(n: usize, edges: &[(usize, usize)]) -> Result<usize> {
    check_edges(n, edges)?;
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    // Warshall's closure, one row at a time.
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (r, &v) in row.iter_mut().zip(&via) {
                    *r |= v;
                }
            }
        }
    }
    let mut class = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        if class[i] != usize::MAX {
            continue;
        }
        for j in i..n {
            if reach[i][j] && reach[j][i] {
                class[j] = count;
            }
        }
        count += 1;
    }
    Ok(count)
}

/// Pearson correlation of (in-degree, out-degree) over all `n` nodes by the
/// raw-sums formula. Parallel edges count once.
pub fn brute_pearson(n: usize, edges: &[(usize, usize)]) -> Result<Option<f64>> {
    check_edges(n, edges)?;
    let distinct: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let mut indeg = vec![0f64; n];
    let mut outdeg = vec![0f64; n];
    for &(a, b) in &distinct {
        outdeg[a] += 1.0;
        indeg[b] += 1.0;
    }
    let nf = n as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (indeg[i], outdeg[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let vx = nf * sxx - sx * sx;
    let vy = nf * syy - sy * sy;
    if n < 2 || vx <= 0.0 || vy <= 0.0 {
        return Ok(None);
    }
    Ok(Some((nf * sxy - sx * sy) / (vx.sqrt() * vy.sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpamCheck {
    pub r1: bool,
    pub r2: bool,
    pub r3: bool,
    pub r4: bool,
}

impl SpamCheck {
    pub fn flagged(&self, require_memo: bool) -> bool {
        self.r1 && self.r2 && self.r3 && (self.r4 || !require_memo)
    }
}

/// Evaluates every rule for `account` directly from one month of traces.
/// The instance is the account's neighbourhood: the account plus everyone
/// it exchanged traces with.
pub fn brute_spam_check(traces: &[Trace], account: &NodeId, params: &SpamParams) -> Result<SpamCheck> {
    let own: Vec<&Trace> = traces
        .iter()
        .filter(|t| &t.source == account || &t.target == account)
        .collect();
    let mut parties: Vec<&NodeId> = own.iter().flat_map(|t| [&t.source, &t.target]).collect();
    parties.sort();
    parties.dedup();
    check_size(parties.len())?;

    let sent: Vec<&Trace> = own
        .iter()
        .copied()
        .filter(|t| t.kind == TraceKind::MoneyTransfer && &t.source == account)
        .collect();
    let mut recipients: Vec<&NodeId> = sent.iter().map(|t| &t.target).collect();
    recipients.sort();
    recipients.dedup();
    if recipients.is_empty() {
        return Ok(SpamCheck::default());
    }

    let total: Decimal = sent.iter().map(|t| t.weight).sum();
    let r1 = total / Decimal::from(recipients.len() as u64) <= params.x;

    let r2 = recipients
        .iter()
        .all(|r| sent.iter().filter(|t| &&t.target == r).count() as u64 <= params.y);

    let silent: Vec<&NodeId> = recipients
        .iter()
        .copied()
        .filter(|r| {
            !own.iter().any(|t| {
                &t.source == *r
                    && &t.target == account
                    && matches!(t.kind, TraceKind::MoneyTransfer | TraceKind::ContractInvocation)
            })
        })
        .collect();
    let r3 = silent.len() as u64 > params.z;

    let mut memo_recipients: BTreeMap<&str, BTreeSet<&NodeId>> = BTreeMap::new();
    for t in &sent {
        if let Some(memo) = &t.memo {
            if silent.contains(&&t.target) {
                memo_recipients.entry(memo).or_default().insert(&t.target);
            }
        }
    }
    let r4 = memo_recipients.values().any(|s| s.len() as u64 >= params.z);
    Ok(SpamCheck { r1, r2, r3, r4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Chain;
    use crate::synth::gen_spam_campaign;

    #[test]
    fn scc_examples() {
        // a -> b -> a plus c
        assert_eq!(brute_scc(3, &[(0, 1), (1, 0)]).unwrap(), 2);
        assert_eq!(brute_scc(3, &[(0, 1), (1, 2), (2, 0)]).unwrap(), 1);
        assert_eq!(brute_scc(0, &[]).unwrap(), 0);
    }

    #[test]
    fn wcc_examples() {
        assert_eq!(brute_wcc(4, &[(0, 1), (2, 1)]).unwrap(), 2);
        assert_eq!(brute_wcc(3, &[]).unwrap(), 3);
    }

    #[test]
    fn pearson_hand_case() {
        // (in, out) degrees (1,2), (2,1), (3,3)
        let edges = [(2, 0), (2, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        let r = brute_pearson(3, &edges).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert_eq!(brute_pearson(2, &[]).unwrap(), None);
    }

    #[test]
    fn refuses_large_instances() {
        assert!(matches!(brute_scc(1001, &[]), Err(Error::OracleTooLarge { .. })));
        assert!(matches!(brute_wcc(5, &[(0, 9)]), Err(Error::Parameter(_))));
    }

    #[test]
    fn spam_check_on_planted_campaign() {
        let ts = gen_spam_campaign(1, 600, Decimal::new(1, 4), "WIN BIG url", 2).unwrap();
        let who = NodeId::regular(Chain::Eosio, "spammer000").unwrap();
        let c = brute_spam_check(&ts, &who, &SpamParams::default()).unwrap();
        assert_eq!(c, SpamCheck { r1: true, r2: true, r3: true, r4: true });

        let ts = gen_spam_campaign(1, 1000, Decimal::new(1, 4), "x", 2).unwrap();
        assert!(brute_spam_check(&ts, &who, &SpamParams::default()).is_err());
    }
}
