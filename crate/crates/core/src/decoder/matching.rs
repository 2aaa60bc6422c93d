//! Thin wrapper over the fusion-blossom MWPM solver.
//!
//! The solver wants even integer weights and no parallel edges, so weights
//! are scaled, rounded to even values and parallel edges are collapsed by the
//! caller. Every connected component that could hold an odd number of
//! defects gets an expensive escape edge to the boundary.

use fusion_blossom::mwpm_solver::{PrimalDualSolver, SolverSerial};
use fusion_blossom::util::{SolverInitializer, SyndromePattern};

const WEIGHT_SCALE: f64 = 1000.0;
/// Weight of escape edges, far above any real path.
const ESCAPE_WEIGHT: f64 = 1.0e6;

/// Log-likelihood weight `ln((1-p)/p)`, floored at a small positive value.
pub fn llr_weight(p: f64) -> f64 {
    let p = p.clamp(1e-300, 0.5);
    ((1.0 - p) / p).ln().max(1e-3)
}

fn to_solver_weight(w: f64) -> isize {
    2 * ((w * WEIGHT_SCALE / 2.0).round() as isize).max(1)
}

/// Graph with `num_nodes` real nodes and one boundary node.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    num_nodes: usize,
    /// `(u, v)` with `v == num_nodes` meaning the boundary.
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    /// Number of caller-supplied edges; later ones are escape edges.
    real_edges: usize,
    initializer: SolverInitializer,
}

impl MatchingGraph {
    /// `edges` must be free of duplicates and self loops; a `None` endpoint
    /// is the boundary.
    pub fn new(num_nodes: usize, edges: &[(usize, Option<usize>, f64)]) -> Self {
        let boundary = num_nodes;
        let mut list: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v, _)| (u, v.unwrap_or(boundary))).collect();
        let mut weights: Vec<f64> = edges.iter().map(|e| e.2).collect();
        let real_edges = list.len();

        // union-find over real nodes to find components without a boundary edge
        let mut parent: Vec<usize> = (0..=num_nodes).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &list {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
            }
        }
        let root_b = find(&mut parent, boundary);
        let mut seen = vec![false; num_nodes + 1];
        for u in 0..num_nodes {
            let r = find(&mut parent, u);
            if r != root_b && !seen[r] {
                seen[r] = true;
                list.push((u, boundary));
                weights.push(ESCAPE_WEIGHT);
            }
        }

        let weighted = list
            .iter()
            .zip(&weights)
            .map(|(&(u, v), &w)| (u, v, to_solver_weight(w)))
            .collect();
        let initializer = SolverInitializer::new(num_nodes + 1, weighted, vec![boundary]);
        MatchingGraph { num_nodes, edges: list, weights, real_edges, initializer }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edge(&self, e: usize) -> (usize, Option<usize>) {
        let (u, v) = self.edges[e];
        (u, if v == self.num_nodes { None } else { Some(v) })
    }

    /// Edge count including escape edges.
    pub fn edges_len(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn is_escape(&self, e: usize) -> bool {
        e >= self.real_edges
    }

    pub fn solver(&self) -> Matcher {
        Matcher { solver: SolverSerial::new(&self.initializer) }
    }
}

/// Reusable per-thread solver state for one [`MatchingGraph`].
pub struct Matcher {
    solver: SolverSerial,
}

impl Matcher {
    /// Edge indices of a minimum-weight edge set whose odd-degree real
    /// nodes are exactly `defects`.
    pub fn solve(&mut self, defects: &[usize]) -> Vec<usize> {
        if defects.is_empty() {
            return Vec::new();
        }
        self.solver.solve(&SyndromePattern::new_vertices(defects.to_vec()));
        let sub = self.solver.subgraph();
        self.solver.clear();
        sub
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        // 0 - 1 - 2 with boundary edges at both ends
        let g = MatchingGraph::new(
            3,
            &[(0, None, 1.0), (0, Some(1), 1.0), (1, Some(2), 1.0), (2, None, 1.0)],
        );
        let mut m = g.solver();
        let mut e = m.solve(&[0, 2]);
        e.sort();
        assert_eq!(e, vec![1, 2]);
        let e = m.solve(&[0]);
        assert_eq!(e, vec![0]);
        assert!(m.solve(&[]).is_empty());
    }

    #[test]
    fn isolated_component_gets_escape() {
        let g = MatchingGraph::new(3, &[(0, Some(1), 2.0)]);
        let mut m = g.solver();
        let e = m.solve(&[0]);
        assert!(e.iter().any(|&k| g.is_escape(k)));
    }
}
