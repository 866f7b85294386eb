use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{objective, Clustering, SolveResult, SolverTag};
use crate::simgraph::CostGraph;

/// Heap entry for a candidate contraction of clusters `a < b`. Entries go
/// stale when either endpoint changes; the stamps detect that.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    stamp_a: u32,
    stamp_b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap: larger cost first, then the lexicographically smaller pair
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

/// Greedy additive edge contraction.
///
/// Starts from singletons and repeatedly contracts the pair of clusters
/// with the largest positive summed inter-cluster cost, ties broken by the
/// smallest `(min id, max id)`. The surviving cluster keeps the smaller id.
/// Stops when no inter-cluster cost is positive.
pub fn gaec(graph: &CostGraph) -> SolveResult {
    let n = graph.n();
    // dense inter-cluster cost matrix, indexed by representative node
    let mut weights = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let c = graph.cost(i, j);
            weights[i * n + j] = c;
            weights[j * n + i] = c;
        }
    }
    let mut active = vec![true; n];
    let mut stamps = vec![0u32; n];
    let mut parent: Vec<usize> = (0..n).collect();

    let mut heap = BinaryHeap::new();
    for i in 0..n {
        for j in i + 1..n {
            let cost = weights[i * n + j];
            if cost > 0.0 {
                heap.push(Candidate {
                    cost,
                    a: i,
                    b: j,
                    stamp_a: 0,
                    stamp_b: 0,
                });
            }
        }
    }

    let mut contractions = 0;
    while let Some(c) = heap.pop() {
        if !active[c.a] || !active[c.b] || stamps[c.a] != c.stamp_a || stamps[c.b] != c.stamp_b {
            continue;
        }
        let (keep, gone) = (c.a, c.b);
        active[gone] = false;
        parent[gone] = keep;
        stamps[keep] += 1;
        contractions += 1;
        for k in 0..n {
            if !active[k] || k == keep {
                continue;
            }
            let merged = weights[keep * n + k] + weights[gone * n + k];
            weights[keep * n + k] = merged;
            weights[k * n + keep] = merged;
            if merged > 0.0 {
                let (a, b) = if keep < k { (keep, k) } else { (k, keep) };
                heap.push(Candidate {
                    cost: merged,
                    a,
                    b,
                    stamp_a: stamps[a],
                    stamp_b: stamps[b],
                });
            }
        }
    }

    let roots: Vec<usize> = (0..n)
        .map(|mut v| {
            while parent[v] != v {
                v = parent[v];
            }
            v
        })
        .collect();
    let clustering = Clustering::from_labels(&roots);
    let objective = objective(graph, &clustering).expect("sizes match");
    SolveResult {
        clustering,
        objective,
        solver: SolverTag::Gaec,
        iterations: contractions,
    }
}
