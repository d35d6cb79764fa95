//! Boundary refinement of a two-way partition.
//!
//! A pass repeatedly moves the unlocked node that leaves the smallest balance
//! violation, then has the largest gain (cut decrease), then the smaller
//! index. A move may leave the lighter side
//! below its bound by at most one node weight, which lets a pass swap nodes
//! under a tight bound. After the pass the move sequence is rolled back to
//! its best prefix, ranked by (balance violation, cut, length). Passes repeat
//! while they improve, so the result is never worse than the input.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::wgraph::WeightedGraph;

const MAX_PASSES: usize = 10;
const MAX_SKIPPED_TOPS: usize = 16;

/// Heap entry: gain, then smaller index first.
type Entry = (i64, Reverse<u32>);

pub(crate) struct Refiner<'g> {
    g: &'g WeightedGraph,
    lower: u64,
    slack: u64,
    side: Vec<u8>,
    internal: Vec<u64>,
    external: Vec<u64>,
    pw: [u64; 2],
    cut: u64,
}

impl<'g> Refiner<'g> {
    pub(crate) fn new(g: &'g WeightedGraph, side: Vec<u8>, lower: u64) -> Self {
        let n = g.n();
        let mut internal = vec![0u64; n];
        let mut external = vec![0u64; n];
        for v in 0..n {
            for (u, w) in g.neighbors(v) {
                if side[u] == side[v] {
                    internal[v] += w;
                } else {
                    external[v] += w;
                }
            }
        }
        let cut = external.iter().sum::<u64>() / 2;
        let pw = g.side_weights(&side);
        Refiner {
            g,
            lower,
            slack: g.max_node_weight(),
            side,
            internal,
            external,
            pw,
            cut,
        }
    }

    pub(crate) fn cut(&self) -> u64 {
        self.cut
    }

    pub(crate) fn violation(&self) -> u64 {
        self.lower.saturating_sub(self.pw[0].min(self.pw[1]))
    }

    pub(crate) fn into_side(self) -> Vec<u8> {
        self.side
    }

    fn gain(&self, v: usize) -> i64 {
        self.external[v] as i64 - self.internal[v] as i64
    }

    fn violation_after(&self, v: usize) -> u64 {
        let from = self.side[v] as usize;
        let w = self.g.vwgt[v];
        let light = (self.pw[from] - w).min(self.pw[1 - from] + w);
        self.lower.saturating_sub(light)
    }

    fn movable(&self, v: usize) -> bool {
        let from = self.side[v] as usize;
        self.pw[from] >= self.g.vwgt[v] && self.pw[from] - self.g.vwgt[v] + self.slack >= self.lower
    }

    /// Move `v` to the other side and update incremental state. Neighbors
    /// whose gain changed are pushed to `heaps` unless locked.
    fn apply(&mut self, v: usize, heaps: &mut Option<(&mut [BinaryHeap<Entry>; 2], &[bool])>) {
        let from = self.side[v] as usize;
        let to = 1 - from;
        self.cut = (self.cut as i64 - self.gain(v)) as u64;
        self.side[v] = to as u8;
        self.pw[from] -= self.g.vwgt[v];
        self.pw[to] += self.g.vwgt[v];
        std::mem::swap(&mut self.internal[v], &mut self.external[v]);
        for (u, w) in self.g.neighbors(v) {
            if self.side[u] as usize == to {
                self.internal[u] += w;
                self.external[u] -= w;
            } else {
                self.internal[u] -= w;
                self.external[u] += w;
            }
            if let Some((h, locked)) = heaps {
                if !locked[u] && self.external[u] > 0 {
                    h[self.side[u] as usize].push((self.gain(u), Reverse(u as u32)));
                }
            }
        }
    }

    fn score(&self) -> (u64, u64) {
        (self.violation(), self.cut)
    }

    /// Run passes until one fails to improve. Returns the number of passes.
    pub(crate) fn run(&mut self) -> usize {
        let mut passes = 0;
        while passes < MAX_PASSES {
            passes += 1;
            if !self.pass() {
                break;
            }
        }
        passes
    }

    fn pass(&mut self) -> bool {
        let n = self.g.n();
        let start = self.score();
        let include_all = self.violation() > 0;
        let mut heaps: [BinaryHeap<Entry>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
        for v in 0..n {
            if include_all || self.external[v] > 0 {
                heaps[self.side[v] as usize].push((self.gain(v), Reverse(v as u32)));
            }
        }
        let mut locked = vec![false; n];
        let mut moves: Vec<u32> = Vec::new();
        let mut best = (start, 0usize);
        let limit = (n / 100).clamp(25, 150);
        let mut since_best = 0;

        while since_best < limit {
            let Some(v) = self.pick(&mut heaps, &locked) else {
                break;
            };
            locked[v] = true;
            self.apply(v, &mut Some((&mut heaps, &locked)));
            moves.push(v as u32);
            let s = self.score();
            if s < best.0 {
                best = (s, moves.len());
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        for &v in moves[best.1..].iter().rev() {
            self.apply(v as usize, &mut None);
        }
        debug_assert_eq!(self.score(), best.0);
        best.0 < start
    }

    fn pick(&self, heaps: &mut [BinaryHeap<Entry>; 2], locked: &[bool]) -> Option<usize> {
        let mut candidate: [Option<Entry>; 2] = [None, None];
        for s in 0..2 {
            let mut skipped = Vec::new();
            while let Some(top) = heaps[s].pop() {
                let v = top.1 .0 as usize;
                if locked[v] || self.side[v] as usize != s || top.0 != self.gain(v) {
                    continue; // stale
                }
                if self.movable(v) {
                    candidate[s] = Some(top);
                    break;
                }
                skipped.push(top);
                if skipped.len() >= MAX_SKIPPED_TOPS {
                    break;
                }
            }
            heaps[s].extend(skipped);
        }
        let chosen = match candidate {
            [Some(a), Some(b)] => {
                // prefer the move that leaves less imbalance, then the larger gain
                let va = self.violation_after(a.1 .0 as usize);
                let vb = self.violation_after(b.1 .0 as usize);
                if (Reverse(va), a) >= (Reverse(vb), b) {
                    heaps[1].push(b);
                    a
                } else {
                    heaps[0].push(a);
                    b
                }
            }
            [Some(a), None] => a,
            [None, Some(b)] => b,
            [None, None] => return None,
        };
        Some(chosen.1 .0 as usize)
    }
}

/// Refine `side` in place on `g` subject to both sides weighing at least
/// `lower`. Returns the resulting cut.
pub fn refine_level(g: &WeightedGraph, side: &mut Vec<u8>, lower: u64) -> u64 {
    let mut r = Refiner::new(g, std::mem::take(side), lower);
    r.run();
    let cut = r.cut();
    *side = r.into_side();
    cut
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn wg(n: usize, edges: &[(u32, u32)]) -> WeightedGraph {
        let ids = (0..n).map(|i| i.to_string()).collect();
        WeightedGraph::from_graph(&Graph::from_edges(0, ids, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap())
    }

    fn two_cliques(k: u32) -> Vec<(u32, u32)> {
        let mut e = Vec::new();
        for base in [0, k] {
            for i in 0..k {
                for j in i + 1..k {
                    e.push((base + i, base + j));
                }
            }
        }
        e.push((0, k));
        e
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let g = wg(10, &two_cliques(5));
        let mut side = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let before = side.clone();
        assert_eq!(refine_level(&g, &mut side, 5), 1);
        assert_eq!(side, before);
    }

    #[test]
    fn swaps_misassigned_nodes_under_exact_balance() {
        let g = wg(10, &two_cliques(5));
        // nodes 3 and 7 swapped
        let mut side = vec![0, 0, 0, 1, 0, 1, 1, 0, 1, 1];
        let start = g.cut(&side);
        let cut = refine_level(&g, &mut side, 5);
        assert_eq!(cut, 1);
        assert!(cut < start);
        assert_eq!(g.cut(&side), cut);
        assert_eq!(g.side_weights(&side), [5, 5]);
    }

    #[test]
    fn restores_balance_from_one_sided_start() {
        let g = wg(10, &two_cliques(5));
        let mut side = vec![0; 10];
        let cut = refine_level(&g, &mut side, 5);
        assert_eq!(g.side_weights(&side), [5, 5]);
        assert_eq!(cut, g.cut(&side));
    }
}
