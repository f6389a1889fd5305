use crate::error::{Error, Result};
use crate::graph::{GraphKind, MonthlyGraph};
use crate::model::Chain;

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Number of weakly connected components. Isolated nodes are components of
/// their own; the empty graph has none.
pub fn count_wcc(graph: &MonthlyGraph) -> usize {
    let n = graph.node_count();
    let mut ds = DisjointSet::new(n);
    let mut components = n;
    for e in graph.edge_refs() {
        if ds.union(e.source, e.target) {
            components -= 1;
        }
    }
    components
}

/// Number of strongly connected components, singletons included.
///
/// Undefined for the UTXO money-transfer graph: every edge touches a txid
/// surrogate, so no two accounts can reach each other both ways.
pub fn count_scc(graph: &MonthlyGraph) -> Result<usize> {
    if graph.chain() == Chain::Bitcoin && graph.kind() == GraphKind::Mtg {
        return Err(Error::NotApplicable(
            "SCC of a UTXO money-transfer graph (no bi-directional edges)".into(),
        ));
    }
    Ok(tarjan_count(graph.node_count(), |v| graph.out_neighbors(v)))
}

/// Iterative Tarjan; returns the number of components.
pub(crate) fn tarjan_count<'a>(n: usize, succ: impl Fn(usize) -> &'a [usize]) -> usize {
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    // (node, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut components = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let nbrs = succ(v);
            if *pos < nbrs.len() {
                let w = nbrs[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                components += 1;
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    if w == v {
                        break;
                    }
                }
            }
        }
    }
    components
}
