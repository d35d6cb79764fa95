//! Multilevel two-way graph partitioning.
//!
//! The input graph is coarsened by heavy-edge matching, the coarsest graph is
//! bisected by region growing, and the bisection is projected back level by
//! level with boundary refinement after every projection.

mod coarsen;
mod initial;
mod refine;
mod wgraph;

use serde::Serialize;

pub use coarsen::{coarsen_with, CoarsenOptions, CoarseningLevel};
pub use initial::INITIAL_TRIALS;
pub use refine::refine_level;
pub use wgraph::WeightedGraph;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::mix64;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionAssignment {
    pub month: u32,
    /// Side of every node, 0 or 1.
    pub side: Vec<u8>,
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub edge_cut: u64,
    /// Set when the coarsest graph was a single node and no split exists.
    pub degenerate: bool,
}

impl PartitionAssignment {
    pub fn side_sizes(&self) -> [usize; 2] {
        let ones = self.side.iter().filter(|&&s| s == 1).count();
        [self.side.len() - ones, ones]
    }
}

/// Smallest admissible side weight: `ceil(beta * (1 - epsilon) * total)`,
/// capped at `floor(total / 2)` so that a split always exists.
pub fn min_side_weight(beta: f64, epsilon: f64, total: u64) -> u64 {
    let raw = (beta * (1.0 - epsilon) * total as f64 - 1e-9).ceil().max(0.0) as u64;
    raw.min(total / 2)
}

/// Sum of weights of edges whose endpoints are on different sides.
pub fn edge_cut(g: &Graph, side: &[u8]) -> u64 {
    g.edges()
        .filter(|&(u, v, _)| side[u as usize] != side[v as usize])
        .map(|(_, _, w)| w)
        .sum()
}

/// Coarsening hierarchy of `g` with default thresholds.
pub fn coarsen(g: &Graph, seed: u64) -> Vec<CoarseningLevel> {
    coarsen_with(WeightedGraph::from_graph(g), seed, CoarsenOptions::default())
}

/// Bisect the coarsest level of `levels`.
pub fn initial_partition(levels: &[CoarseningLevel], beta: f64, epsilon: f64, seed: u64) -> PartitionAssignment {
    let coarsest = &levels.last().expect("hierarchy has a coarsest level").graph;
    let total = coarsest.total_node_weight();
    if coarsest.n() <= 1 {
        return PartitionAssignment {
            month: 0,
            side: vec![0; coarsest.n()],
            beta,
            epsilon,
            seed,
            edge_cut: 0,
            degenerate: true,
        };
    }
    let lower = min_side_weight(beta, epsilon, total);
    let (side, edge_cut) = initial::grow_bisection(coarsest, beta, lower, seed);
    PartitionAssignment {
        month: 0,
        side,
        beta,
        epsilon,
        seed,
        edge_cut,
        degenerate: false,
    }
}

/// Refine `partition` (valid on the coarsest level) there, then project it
/// down level by level, refining after each projection.
pub fn refine(levels: &[CoarseningLevel], partition: PartitionAssignment) -> PartitionAssignment {
    let total = levels[0].graph.total_node_weight();
    let lower = min_side_weight(partition.beta, partition.epsilon, total);
    let mut side = partition.side;
    let mut cut = partition.edge_cut;
    let coarsest = levels.len() - 1;
    for (i, level) in levels.iter().enumerate().rev() {
        if i < coarsest {
            let cmap = level.to_coarser.as_ref().expect("non-coarsest level has a map");
            side = cmap.iter().map(|&c| side[c as usize]).collect();
        }
        let before = cut;
        let balanced_before = level.graph.side_weights(&side).iter().all(|&w| w >= lower);
        cut = refine_level(&level.graph, &mut side, lower);
        debug_assert!(!balanced_before || cut <= before, "refinement increased the cut");
    }
    PartitionAssignment {
        side,
        edge_cut: cut,
        degenerate: levels[0].graph.n() <= 1,
        ..partition
    }
}

/// Two-way partition of a connected graph. Deterministic in
/// `(g, beta, epsilon, seed)`.
pub fn bipartition(g: &Graph, beta: f64, epsilon: f64, seed: u64) -> Result<PartitionAssignment> {
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(Error::Argument(format!("beta must lie in (0, 0.5], got {beta}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Argument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if g.n() < 2 {
        return Err(Error::Precondition(format!("bipartition needs at least 2 nodes, got {}", g.n())));
    }
    if !g.is_connected() {
        return Err(Error::Precondition("bipartition needs a connected graph (pass the giant component)".into()));
    }
    let levels = coarsen(g, seed);
    let initial = initial_partition(&levels, beta, epsilon, mix64(seed ^ 0x1417));
    let mut result = refine(&levels, initial);
    result.month = g.month();
    result.seed = seed;
    debug_assert_eq!(result.edge_cut, edge_cut(g, &result.side));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Graph {
        let ids = (0..n).map(|i| format!("{i:03}")).collect();
        Graph::from_edges(1, ids, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap()
    }

    fn cliques_with_bridge(k: u32) -> Graph {
        let mut e = Vec::new();
        for base in [0, k] {
            for i in 0..k {
                for j in i + 1..k {
                    e.push((base + i, base + j));
                }
            }
        }
        e.push((k - 1, k));
        graph(2 * k as usize, &e)
    }

    #[test]
    fn edge_cut_examples() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        assert_eq!(edge_cut(&g, &[0, 0, 0, 1, 1, 1]), 1);
        assert_eq!(edge_cut(&g, &[0; 6]), 0);
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(edge_cut(&k4, &[0, 0, 1, 1]), 4);
    }

    #[test]
    fn balance_bound() {
        assert_eq!(min_side_weight(0.5, 0.05, 14), 7);
        assert_eq!(min_side_weight(0.5, 0.05, 13), 6);
        assert_eq!(min_side_weight(0.5, 0.05, 400), 190);
        assert_eq!(min_side_weight(0.2, 0.05, 100), 19);
        assert_eq!(min_side_weight(0.5, 0.0, 10), 5);
    }

    #[test]
    fn recovers_two_eight_cliques() {
        let g = cliques_with_bridge(8);
        for seed in 0..20 {
            let p = bipartition(&g, 0.5, DEFAULT_EPSILON, seed).unwrap();
            assert_eq!(p.edge_cut, 1);
            assert!(p.side[..8].iter().all(|&s| s == p.side[0]));
            assert!(p.side[8..].iter().all(|&s| s == p.side[8]));
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let g = cliques_with_bridge(6);
        let a = bipartition(&g, 0.5, 0.05, 99).unwrap();
        let b = bipartition(&g, 0.5, 0.05, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_disconnected_input() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        assert!(matches!(bipartition(&g, 0.5, 0.05, 1), Err(Error::Precondition(_))));
        assert!(matches!(bipartition(&graph(1, &[]), 0.5, 0.05, 1), Err(Error::Precondition(_))));
        assert!(matches!(bipartition(&g, 0.7, 0.05, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn single_supernode_is_degenerate() {
        let g = graph(2, &[(0, 1)]);
        let opts = CoarsenOptions {
            coarsen_to: 2,
            min_shrink: 0.05,
        };
        let levels = coarsen_with(WeightedGraph::from_graph(&g), 0, opts);
        let p = initial_partition(&levels, 0.5, 0.05, 0);
        assert!(p.degenerate);
        assert_eq!(p.side, vec![0]);
        // projecting to the 2-node level restores a 1/1 split
        let r = refine(&levels, p);
        assert_eq!(r.side_sizes(), [1, 1]);
        assert_eq!(r.edge_cut, 1);
    }

    #[test]
    fn refinement_fixes_misassigned_clique_nodes() {
        let g = cliques_with_bridge(5);
        let levels = coarsen(&g, 0);
        assert_eq!(levels.len(), 1);
        let side = vec![0, 0, 0, 1, 0, 1, 1, 0, 1, 1];
        let start = edge_cut(&g, &side);
        let p = PartitionAssignment {
            month: 1,
            edge_cut: start,
            side,
            beta: 0.5,
            epsilon: 0.05,
            seed: 0,
            degenerate: false,
        };
        let r = refine(&levels, p);
        let cut = r.edge_cut;
        assert_eq!(cut, 1);
        assert_eq!(r.side_sizes(), [5, 5]);
        assert!(cut <= start);
    }
}
