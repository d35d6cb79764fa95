use crate::graph::Graph;

/// Node- and edge-weighted graph used inside the multilevel scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    pub(crate) xadj: Vec<usize>,
    pub(crate) adjncy: Vec<u32>,
    pub(crate) adjwgt: Vec<u64>,
    pub(crate) vwgt: Vec<u64>,
}

impl WeightedGraph {
    pub fn from_graph(g: &Graph) -> Self {
        let (offsets, targets, weights) = g.raw_parts();
        WeightedGraph {
            xadj: offsets.to_vec(),
            adjncy: targets.to_vec(),
            adjwgt: weights.to_vec(),
            vwgt: vec![1; g.n()],
        }
    }

    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    pub fn m(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn node_weight(&self, v: usize) -> u64 {
        self.vwgt[v]
    }

    pub fn node_weights(&self) -> &[u64] {
        &self.vwgt
    }

    pub fn total_node_weight(&self) -> u64 {
        self.vwgt.iter().sum()
    }

    pub fn max_node_weight(&self) -> u64 {
        self.vwgt.iter().copied().max().unwrap_or(0)
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.xadj[v]..self.xadj[v + 1];
        self.adjncy[r.clone()].iter().zip(&self.adjwgt[r]).map(|(&u, &w)| (u as usize, w))
    }

    /// Sum of weights of edges whose endpoints lie on different sides.
    pub fn cut(&self, side: &[u8]) -> u64 {
        let mut twice = 0;
        for v in 0..self.n() {
            for (u, w) in self.neighbors(v) {
                if side[u] != side[v] {
                    twice += w;
                }
            }
        }
        twice / 2
    }

    pub fn side_weights(&self, side: &[u8]) -> [u64; 2] {
        let mut pw = [0u64; 2];
        for (v, &s) in side.iter().enumerate() {
            pw[s as usize] += self.vwgt[v];
        }
        pw
    }
}
