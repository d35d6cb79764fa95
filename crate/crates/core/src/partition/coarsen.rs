//! Heavy-edge matching coarsening.

use rand::seq::SliceRandom;
use rand::Rng;

use super::wgraph::WeightedGraph;
use crate::rng;

const UNMATCHED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarsenOptions {
    /// Stop once a level has fewer nodes than this.
    pub coarsen_to: usize,
    /// Stop once a level removes less than this share of nodes.
    pub min_shrink: f64,
}

impl Default for CoarsenOptions {
    fn default() -> Self {
        CoarsenOptions {
            coarsen_to: 100,
            min_shrink: 0.05,
        }
    }
}

/// One level of the hierarchy. `to_coarser[v]` is the node of the next level
/// that `v` collapses into; the coarsest level has none.
#[derive(Clone, Debug)]
pub struct CoarseningLevel {
    pub graph: WeightedGraph,
    pub to_coarser: Option<Vec<u32>>,
}

/// Build the hierarchy `G_0, G_1, ...` starting from `g` (level 0).
pub fn coarsen_with(g: WeightedGraph, seed: u64, opts: CoarsenOptions) -> Vec<CoarseningLevel> {
    let mut rng = rng::seeded(seed);
    let mut levels = Vec::new();
    let mut current = g;
    while current.n() >= opts.coarsen_to.max(2) && current.m() > 0 {
        let cmap = heavy_edge_matching(&current, &mut rng);
        let coarse = contract(&current, &cmap);
        let shrink = 1.0 - coarse.n() as f64 / current.n() as f64;
        levels.push(CoarseningLevel {
            graph: current,
            to_coarser: Some(cmap),
        });
        current = coarse;
        if shrink < opts.min_shrink {
            break;
        }
    }
    levels.push(CoarseningLevel {
        graph: current,
        to_coarser: None,
    });
    levels
}

/// Match every node with its unmatched neighbor of maximal edge weight
/// (ties to the smaller index). Nodes are visited in decreasing order of their
/// heaviest incident edge, ties in seeded random order, so the heaviest edges
/// are offered first. Returns the coarse index of every node.
fn heavy_edge_matching<R: Rng>(g: &WeightedGraph, rng: &mut R) -> Vec<u32> {
    let n = g.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let heaviest: Vec<u64> = (0..n).map(|v| g.neighbors(v).map(|(_, w)| w).max().unwrap_or(0)).collect();
    // stable sort keeps the shuffled order within equal weights
    order.sort_by_key(|&v| std::cmp::Reverse(heaviest[v as usize]));

    let mut mate = vec![UNMATCHED; n];
    for &u in &order {
        let u = u as usize;
        if mate[u] != UNMATCHED {
            continue;
        }
        let mut best: Option<(u64, usize)> = None;
        for (v, w) in g.neighbors(u) {
            if mate[v] != UNMATCHED {
                continue;
            }
            best = match best {
                Some((bw, bv)) if bw > w || (bw == w && bv < v) => Some((bw, bv)),
                _ => Some((w, v)),
            };
        }
        match best {
            Some((_, v)) => {
                mate[u] = v as u32;
                mate[v] = u as u32;
            }
            None => mate[u] = u as u32,
        }
    }

    let mut cmap = vec![UNMATCHED; n];
    let mut next = 0u32;
    for v in 0..n {
        if cmap[v] == UNMATCHED {
            cmap[v] = next;
            cmap[mate[v] as usize] = next;
            next += 1;
        }
    }
    cmap
}

/// Collapse matched pairs: node weights add, parallel edges merge by weight
/// addition and intra-pair edges disappear.
fn contract(g: &WeightedGraph, cmap: &[u32]) -> WeightedGraph {
    let cn = cmap.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut members: Vec<[u32; 2]> = vec![[UNMATCHED; 2]; cn];
    for (v, &c) in cmap.iter().enumerate() {
        let slot = &mut members[c as usize];
        if slot[0] == UNMATCHED {
            slot[0] = v as u32;
        } else {
            slot[1] = v as u32;
        }
    }
    let mut vwgt = vec![0u64; cn];
    let mut xadj = Vec::with_capacity(cn + 1);
    xadj.push(0);
    let mut adjncy: Vec<u32> = Vec::with_capacity(g.adjncy.len());
    let mut adjwgt: Vec<u64> = Vec::with_capacity(g.adjncy.len());
    // position of coarse neighbor in the current row, or MAX
    let mut slot = vec![usize::MAX; cn];
    for c in 0..cn {
        let row_start = adjncy.len();
        for &v in members[c].iter().filter(|&&v| v != UNMATCHED) {
            let v = v as usize;
            vwgt[c] += g.vwgt[v];
            for (u, w) in g.neighbors(v) {
                let cu = cmap[u] as usize;
                if cu == c {
                    continue;
                }
                if slot[cu] == usize::MAX {
                    slot[cu] = adjncy.len();
                    adjncy.push(cu as u32);
                    adjwgt.push(w);
                } else {
                    adjwgt[slot[cu]] += w;
                }
            }
        }
        // sorted rows keep tie-breaking by index well defined downstream
        let mut row: Vec<(u32, u64)> =
            adjncy[row_start..].iter().copied().zip(adjwgt[row_start..].iter().copied()).collect();
        for &(u, _) in &row {
            slot[u as usize] = usize::MAX;
        }
        row.sort_unstable_by_key(|&(u, _)| u);
        for (k, (u, w)) in row.into_iter().enumerate() {
            adjncy[row_start + k] = u;
            adjwgt[row_start + k] = w;
        }
        xadj.push(adjncy.len());
    }
    WeightedGraph {
        xadj,
        adjncy,
        adjwgt,
        vwgt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn wg(n: usize, edges: &[(u32, u32, u64)]) -> WeightedGraph {
        let ids = (0..n).map(|i| i.to_string()).collect();
        WeightedGraph::from_graph(&Graph::from_edges(0, ids, edges.iter().copied()).unwrap())
    }

    const TINY: CoarsenOptions = CoarsenOptions {
        coarsen_to: 2,
        min_shrink: 0.05,
    };

    #[test]
    fn single_edge_collapses_to_one_supernode() {
        let levels = coarsen_with(wg(2, &[(0, 1, 1)]), 1, TINY);
        assert_eq!(levels.len(), 2);
        let coarsest = &levels[1].graph;
        assert_eq!(coarsest.n(), 1);
        assert_eq!(coarsest.node_weights(), &[2]);
        assert_eq!(coarsest.m(), 0);
    }

    #[test]
    fn heaviest_edge_collapses_first() {
        for seed in 0..50 {
            let levels = coarsen_with(wg(3, &[(0, 1, 1), (1, 2, 5), (0, 2, 1)]), seed, TINY);
            let cmap = levels[0].to_coarser.as_ref().unwrap();
            assert_eq!(cmap[1], cmap[2], "seed {seed}");
            assert_ne!(cmap[0], cmap[1]);
            // the surviving coarse edge carries both unit edges
            assert_eq!(levels[1].graph.adjwgt, vec![2, 2]);
        }
    }

    #[test]
    fn node_weight_is_conserved_on_a_path() {
        let edges: Vec<_> = (0..5).map(|i| (i, i + 1, 1)).collect();
        for seed in 0..20 {
            let levels = coarsen_with(wg(6, &edges), seed, TINY);
            for level in &levels {
                assert_eq!(level.graph.total_node_weight(), 6);
            }
            assert!(levels.len() >= 2);
        }
    }

    #[test]
    fn small_graphs_are_not_coarsened_by_default() {
        let levels = coarsen_with(wg(3, &[(0, 1, 1), (1, 2, 1)]), 0, CoarsenOptions::default());
        assert_eq!(levels.len(), 1);
    }

    #[test]
    fn contracted_graph_is_symmetric_without_self_loops() {
        let mut edges = Vec::new();
        for i in 0..30u32 {
            edges.push((i, (i + 1) % 30, 1 + u64::from(i % 3)));
            edges.push((i, (i + 7) % 30, 1));
        }
        let levels = coarsen_with(wg(30, &edges), 9, TINY);
        for level in &levels {
            let g = &level.graph;
            for v in 0..g.n() {
                for (u, w) in g.neighbors(v) {
                    assert_ne!(u, v);
                    assert!(g.neighbors(u).any(|(x, xw)| x == v && xw == w));
                }
            }
        }
    }
}
