use super::{objective, Clustering, MulticutError, SolveResult, SolverTag};
use crate::simgraph::CostGraph;

/// Moves whose gain is within this fraction of the largest |cost| are not
/// applied; incremental sums drift by far less than this within one pass.
const RELATIVE_EPS: f64 = 1e-10;

struct State<'g> {
    graph: &'g CostGraph,
    n: usize,
    /// Cluster slot of each node. Slots are `0..n`; empty slots are reused.
    labels: Vec<usize>,
    sizes: Vec<usize>,
    /// `sums[v * n + c]`: summed cost from `v` to the members of slot `c`
    /// (excluding `v` itself).
    sums: Vec<f64>,
}

impl<'g> State<'g> {
    fn new(graph: &'g CostGraph, start: &Clustering) -> Self {
        let n = graph.n();
        let labels = start.labels().to_vec();
        let mut sizes = vec![0; n];
        for &l in &labels {
            sizes[l] += 1;
        }
        let mut state = Self {
            graph,
            n,
            labels,
            sizes,
            sums: vec![0.0; n * n],
        };
        state.recompute_sums();
        state
    }

    fn recompute_sums(&mut self) {
        let n = self.n;
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        for v in 0..n {
            for u in 0..n {
                if u != v {
                    self.sums[v * n + self.labels[u]] += self.graph.cost(u, v);
                }
            }
        }
    }

    fn sum(&self, v: usize, slot: usize) -> f64 {
        self.sums[v * self.n + slot]
    }

    fn empty_slot(&self) -> usize {
        self.sizes.iter().position(|&s| s == 0).expect("fewer than n non-empty clusters")
    }

    fn move_node(&mut self, v: usize, to: usize) {
        let n = self.n;
        let from = self.labels[v];
        for u in 0..n {
            if u != v {
                let w = self.graph.cost(u, v);
                self.sums[u * n + from] -= w;
                self.sums[u * n + to] += w;
            }
        }
        self.labels[v] = to;
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
    }

    fn join(&mut self, keep: usize, gone: usize) {
        let n = self.n;
        for u in 0..n {
            self.sums[u * n + keep] += self.sums[u * n + gone];
            self.sums[u * n + gone] = 0.0;
            if self.labels[u] == gone {
                self.labels[u] = keep;
            }
        }
        self.sizes[keep] += self.sizes[gone];
        self.sizes[gone] = 0;
    }

    /// One sweep over nodes in ascending order. For each node the best
    /// strictly improving move is applied immediately: into another existing
    /// cluster (ascending slot order wins ties) or out into a new singleton.
    fn node_moves(&mut self, eps: f64) -> usize {
        let mut applied = 0;
        for v in 0..self.n {
            let from = self.labels[v];
            let stay = self.sum(v, from);
            let mut best: Option<(usize, f64)> = None;
            for slot in 0..self.n {
                if slot == from || self.sizes[slot] == 0 {
                    continue;
                }
                // cutting v from its cluster costs `stay`, joining `slot`
                // un-cuts `sum(v, slot)`
                let delta = stay - self.sum(v, slot);
                if delta < -eps && best.is_none_or(|(_, d)| delta < d) {
                    best = Some((slot, delta));
                }
            }
            if self.sizes[from] > 1 {
                let delta = stay;
                if delta < -eps && best.is_none_or(|(_, d)| delta < d) {
                    best = Some((self.empty_slot(), delta));
                }
            }
            if let Some((to, _)) = best {
                self.move_node(v, to);
                applied += 1;
            }
        }
        applied
    }

    /// Joins cluster pairs with positive summed inter-cluster cost, scanning
    /// pairs of slots in ascending order.
    fn joins(&mut self, eps: f64) -> usize {
        let n = self.n;
        let slots: Vec<usize> = (0..n).filter(|&s| self.sizes[s] > 0).collect();
        let k = slots.len();
        let mut slot_pos = vec![usize::MAX; n];
        for (p, &s) in slots.iter().enumerate() {
            slot_pos[s] = p;
        }
        // between[p * k + q]: summed cost between clusters slots[p], slots[q]
        let mut between = vec![0.0; k * k];
        for u in 0..n {
            let p = slot_pos[self.labels[u]];
            for (q, &s) in slots.iter().enumerate() {
                between[p * k + q] += self.sum(u, s);
            }
        }

        let mut alive = vec![true; k];
        let mut applied = 0;
        for p in 0..k {
            if !alive[p] {
                continue;
            }
            for q in p + 1..k {
                if !alive[q] || between[p * k + q] <= eps {
                    continue;
                }
                self.join(slots[p], slots[q]);
                alive[q] = false;
                for r in 0..k {
                    between[p * k + r] += between[q * k + r];
                    between[r * k + p] += between[r * k + q];
                }
                applied += 1;
            }
        }
        applied
    }
}

/// Local search from `start` over node moves, node extractions into new
/// singletons and cluster joins. Passes repeat until one finds no strictly
/// improving move, so the objective never increases.
pub fn klj_refine(graph: &CostGraph, start: &Clustering) -> Result<SolveResult, MulticutError> {
    if start.n() != graph.n() {
        return Err(MulticutError::SizeMismatch {
            clustering: start.n(),
            graph: graph.n(),
        });
    }
    let eps = RELATIVE_EPS * graph.max_abs_cost();
    let mut state = State::new(graph, start);
    let mut moves = 0;
    loop {
        let applied = state.node_moves(eps) + state.joins(eps);
        moves += applied;
        if applied == 0 {
            break;
        }
        state.recompute_sums();
    }

    let clustering = Clustering::from_labels(&state.labels);
    let objective = objective(graph, &clustering)?;
    Ok(SolveResult {
        clustering,
        objective,
        solver: SolverTag::Klj,
        iterations: moves,
    })
}
