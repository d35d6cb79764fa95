//! Immutable undirected weighted graph in compressed adjacency form.
//!
//! Nodes carry a user identifier; adjacency lists are sorted by neighbor
//! index and store the retweet multiplicity of each tie. Structural metrics
//! ignore the weights, the partitioner uses them for heavy-edge matching.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    month: u32,
    node_ids: Vec<String>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u64>,
}

impl Graph {
    pub fn empty(month: u32) -> Self {
        Graph {
            month,
            node_ids: Vec::new(),
            offsets: vec![0],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Build a graph from an undirected edge list.
    ///
    /// Each edge may be given in either orientation. Repeated edges are merged
    /// by adding their weights; self-loops and zero weights are rejected.
    pub fn from_edges<I>(month: u32, node_ids: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, u64)>,
    {
        let n = node_ids.len();
        let mut list: Vec<(u32, u32, u64)> = Vec::new();
        for (u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Argument(format!("edge ({u},{v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::Argument(format!("self-loop on node {u}")));
            }
            if w == 0 {
                return Err(Error::Argument(format!("edge ({u},{v}) has zero weight")));
            }
            list.push((u, v, w));
            list.push((v, u, w));
        }
        list.sort_unstable_by_key(|&(u, v, _)| (u, v));

        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(list.len());
        let mut weights: Vec<u64> = Vec::with_capacity(list.len());
        let mut last: Option<(u32, u32)> = None;
        for (u, v, w) in list {
            if last == Some((u, v)) {
                *weights.last_mut().expect("merged edge has a predecessor") += w;
                continue;
            }
            last = Some((u, v));
            targets.push(v);
            weights.push(w);
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(Graph {
            month,
            node_ids,
            offsets,
            targets,
            weights,
        })
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn with_month(mut self, month: u32) -> Self {
        self.month = month;
        self
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn user_id(&self, v: usize) -> &str {
        &self.node_ids[v]
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.node_ids.iter().position(|u| u == user)
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_weights(&self, v: usize) -> &[u64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum::<u64>() / 2
    }

    /// Edges as `(u, v, weight)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.edge_weights(u))
                .filter(move |(&v, _)| v as usize > u)
                .map(move |(&v, &w)| (u as u32, v, w))
        })
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[u32], &[u64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    /// Subgraph induced by `keep` (any order; duplicates ignored). Node order
    /// follows the original indices, so relative order is preserved.
    pub fn induced(&self, keep: &[u32]) -> Graph {
        let mut remap = vec![u32::MAX; self.n()];
        let mut kept: Vec<u32> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        for (new, &old) in kept.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let node_ids = kept.iter().map(|&v| self.node_ids[v as usize].clone()).collect();
        let mut offsets = Vec::with_capacity(kept.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for &old in &kept {
            let old = old as usize;
            for (&v, &w) in self.neighbors(old).iter().zip(self.edge_weights(old)) {
                let nv = remap[v as usize];
                if nv != u32::MAX {
                    targets.push(nv);
                    weights.push(w);
                }
            }
            offsets.push(targets.len());
        }
        Graph {
            month: self.month,
            node_ids,
            offsets,
            targets,
            weights,
        }
    }

    /// Connected components, each sorted by node index, listed in order of
    /// their smallest node index.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s as u32);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in self.neighbors(u as usize) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }
}

/// Largest connected component together with its share of the nodes.
#[derive(Clone, Debug)]
pub struct GiantComponent {
    pub graph: Graph,
    /// `|V_gc| / |V|`, 1 for an empty graph.
    pub fraction: f64,
    /// Original index of each node kept.
    pub original: Vec<u32>,
}

/// Induced subgraph on the largest connected component. Equal-sized
/// components are ranked by their smallest user id.
pub fn giant_component(g: &Graph) -> GiantComponent {
    if g.is_empty() {
        return GiantComponent {
            graph: g.clone(),
            fraction: 1.0,
            original: Vec::new(),
        };
    }
    let comps = g.components();
    let min_id = |c: &Vec<u32>| c.iter().map(|&v| g.user_id(v as usize)).min().unwrap_or("");
    let best = comps
        .iter()
        .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| min_id(a).cmp(min_id(b))))
        .expect("non-empty graph has a component");
    GiantComponent {
        graph: g.induced(best),
        fraction: best.len() as f64 / g.n() as f64,
        original: best.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i:02}")).collect()
    }

    #[test]
    fn merges_parallel_edges_and_keeps_symmetry() {
        let g = Graph::from_edges(1, ids(3), [(0, 1, 2), (1, 0, 1), (1, 2, 1)]).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edge_weights(0), &[3]);
        assert_eq!(g.edge_weights(1), &[3, 1]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 3), (1, 2, 1)]);
    }

    #[test]
    fn rejects_self_loops() {
        assert!(Graph::from_edges(1, ids(2), [(1, 1, 1)]).is_err());
        assert!(Graph::from_edges(1, ids(2), [(0, 2, 1)]).is_err());
    }

    #[test]
    fn giant_component_picks_largest() {
        // 5-path and a 3-path
        let edges = [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1), (5, 6, 1), (6, 7, 1)];
        let g = Graph::from_edges(1, ids(8), edges).unwrap();
        let gc = giant_component(&g);
        assert_eq!(gc.graph.n(), 5);
        assert_eq!(gc.fraction, 0.625);
        assert_eq!(gc.original, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn giant_component_of_connected_graph_is_itself() {
        let g = Graph::from_edges(1, ids(3), [(0, 1, 1), (1, 2, 1), (0, 2, 4)]).unwrap();
        let gc = giant_component(&g);
        assert_eq!(gc.graph, g);
        assert_eq!(gc.fraction, 1.0);
    }

    #[test]
    fn giant_component_tie_goes_to_smallest_user_id() {
        let names = ["m", "n", "o", "p", "b", "c", "d", "z"].map(String::from).to_vec();
        let edges = [(0, 1, 1), (1, 2, 1), (2, 3, 1), (4, 5, 1), (5, 6, 1), (6, 7, 1)];
        let g = Graph::from_edges(1, names, edges).unwrap();
        let gc = giant_component(&g);
        assert_eq!(gc.original, vec![4, 5, 6, 7]);
        assert_eq!(gc.graph.node_ids(), &["b", "c", "d", "z"]);
    }

    #[test]
    fn empty_graph_gc() {
        let gc = giant_component(&Graph::empty(3));
        assert!(gc.graph.is_empty());
        assert_eq!(gc.fraction, 1.0);
    }
}
