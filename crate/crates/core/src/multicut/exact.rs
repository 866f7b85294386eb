use super::{Clustering, MulticutError, SolveResult, SolverTag};
use crate::simgraph::CostGraph;

/// Bell(10) = 115,975 partitions.
pub const BRUTE_FORCE_MAX_NODES: usize = 10;

struct Search<'g> {
    graph: &'g CostGraph,
    labels: Vec<usize>,
    best_labels: Vec<usize>,
    best: f64,
    visited: usize,
}

impl Search<'_> {
    /// Assigns node `i` given labels `0..i` whose largest id is `max_label`,
    /// visiting restricted growth strings in lexicographic order.
    fn extend(&mut self, i: usize, max_label: usize, cut_so_far: f64) {
        let n = self.labels.len();
        if i == n {
            self.visited += 1;
            if cut_so_far < self.best {
                self.best = cut_so_far;
                self.best_labels.copy_from_slice(&self.labels);
            }
            return;
        }
        for label in 0..=max_label + 1 {
            let added: f64 = (0..i)
                .filter(|&j| self.labels[j] != label)
                .map(|j| self.graph.cost(i, j))
                .sum();
            self.labels[i] = label;
            self.extend(i + 1, max_label.max(label), cut_so_far + added);
        }
    }
}

/// Exhaustive minimum over all set partitions. Partitions are enumerated as
/// canonical label strings in lexicographic order and only strictly better
/// objectives replace the incumbent, so ties resolve to the lexicographically
/// smallest canonical labelling.
pub fn brute_force(graph: &CostGraph) -> Result<SolveResult, MulticutError> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(MulticutError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    if n == 0 {
        return Ok(SolveResult {
            clustering: Clustering::singletons(0),
            objective: 0.0,
            solver: SolverTag::Exact,
            iterations: 1,
        });
    }
    let mut search = Search {
        graph,
        labels: vec![0; n],
        best_labels: vec![0; n],
        best: f64::INFINITY,
        visited: 0,
    };
    search.extend(1, 0, 0.0);
    let clustering = Clustering::from_labels(&search.best_labels);
    // recompute in the canonical summation order shared with the heuristics
    let objective = super::objective(graph, &clustering)?;
    Ok(SolveResult {
        clustering,
        objective,
        solver: SolverTag::Exact,
        iterations: search.visited,
    })
}
