//! Greedy region-growing bisection of the coarsest graph.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::refine::Refiner;
use super::wgraph::WeightedGraph;
use crate::rng;

pub const INITIAL_TRIALS: usize = 8;

/// Grow side 0 breadth-first from `start` until it holds at least `target`
/// weight; everything else is side 1.
fn grow_region<R: Rng>(g: &WeightedGraph, start: usize, target: u64, rng: &mut R) -> Vec<u8> {
    let n = g.n();
    let mut side = vec![1u8; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    let mut grown = 0u64;
    let mut remaining = n;
    queued[start] = true;
    queue.push_back(start);
    while grown < target && remaining > 0 {
        if queue.is_empty() {
            // restart from a random unassigned node (only for disconnected input)
            let mut pick = rng.gen_range(0..n);
            while queued[pick] {
                pick = (pick + 1) % n;
            }
            queued[pick] = true;
            queue.push_back(pick);
        }
        let Some(v) = queue.pop_front() else { break };
        side[v] = 0;
        grown += g.node_weight(v);
        remaining -= 1;
        for (u, _) in g.neighbors(v) {
            if !queued[u] {
                queued[u] = true;
                queue.push_back(u);
            }
        }
    }
    side
}

/// Best of [`INITIAL_TRIALS`] grown-and-refined bisections, ranked by
/// (balance violation, cut); the first trial wins ties. Trials start from
/// distinct nodes while there are enough.
pub fn grow_bisection(g: &WeightedGraph, beta: f64, lower: u64, seed: u64) -> (Vec<u8>, u64) {
    let total = g.total_node_weight();
    let target = (beta * total as f64).ceil() as u64;
    let mut rng = rng::seeded(seed);
    let mut starts: Vec<usize> = (0..g.n()).collect();
    starts.shuffle(&mut rng);
    let mut best: Option<((u64, u64), Vec<u8>)> = None;
    for t in 0..INITIAL_TRIALS {
        let side = grow_region(g, starts[t % starts.len()], target, &mut rng);
        let mut r = Refiner::new(g, side, lower);
        r.run();
        let score = (r.violation(), r.cut());
        if best.as_ref().map_or(true, |(b, _)| score < *b) {
            best = Some((score, r.into_side()));
        }
    }
    let ((_, cut), side) = best.expect("at least one trial");
    (side, cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn wg(n: usize, edges: &[(u32, u32)]) -> WeightedGraph {
        let ids = (0..n).map(|i| i.to_string()).collect();
        WeightedGraph::from_graph(&Graph::from_edges(0, ids, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap())
    }

    #[test]
    fn grown_region_reaches_target() {
        let g = wg(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let mut rng = rng::seeded(3);
        let side = grow_region(&g, 0, 3, &mut rng);
        assert_eq!(side.iter().filter(|&&s| s == 0).count(), 3);
    }

    #[test]
    fn two_triangles_split_at_the_bridge() {
        let g = wg(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        for seed in 0..20 {
            let (side, cut) = grow_bisection(&g, 0.5, 3, seed);
            assert_eq!(cut, 1);
            assert!(side[0] == side[1] && side[1] == side[2]);
            assert!(side[3] == side[4] && side[4] == side[5]);
            assert_ne!(side[0], side[3]);
        }
    }

    #[test]
    fn four_cycle_cut_is_two() {
        let g = wg(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        for seed in 0..20 {
            assert_eq!(grow_bisection(&g, 0.5, 2, seed).1, 2);
        }
    }
}
