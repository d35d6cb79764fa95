//! Definition-direct oracles and random fixtures shared by the integration
//! tests. Nothing here calls into the optimized code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use vaxnet::leaning::{Community, CommunityLabeling};
use vaxnet::Graph;

pub fn graph(n: usize, edges: &[(u32, u32)]) -> Graph {
    let ids = (0..n).map(|i| format!("n{i:03}")).collect();
    Graph::from_edges(1, ids, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap()
}

/// Random connected graph: a random spanning tree plus G(n, p) extras.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v) as u32, v as u32));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    edges.sort();
    edges.dedup();
    graph(n, &edges)
}

/// Random graph, possibly disconnected.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    graph(n, &edges)
}

pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n).map(|v| (rng.gen_range(0..v) as u32, v as u32)).collect();
    graph(n, &edges)
}

pub fn adjacency_matrix(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut a = vec![vec![false; n]; n];
    for (u, v, _) in g.edges() {
        a[u as usize][v as usize] = true;
        a[v as usize][u as usize] = true;
    }
    a
}

pub struct BruteMetrics {
    pub density: f64,
    pub avg_clustering: f64,
    pub avg_degree: f64,
    pub s_metric: f64,
}

/// Metrics straight from their definitions over the adjacency matrix.
pub fn brute_metrics(g: &Graph) -> BruteMetrics {
    let a = adjacency_matrix(g);
    let n = a.len();
    let deg: Vec<usize> = a.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let mut m = 0usize;
    let mut s = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            if a[u][v] {
                m += 1;
                s += (deg[u] * deg[v]) as f64;
            }
        }
    }
    let mut cc = 0.0;
    for v in 0..n {
        let mut t = 0usize;
        for x in 0..n {
            for y in x + 1..n {
                if a[v][x] && a[v][y] && a[x][y] {
                    t += 1;
                }
            }
        }
        if deg[v] >= 2 {
            cc += 2.0 * t as f64 / (deg[v] * (deg[v] - 1)) as f64;
        }
    }
    BruteMetrics {
        density: if n >= 2 { m as f64 / (n * (n - 1) / 2) as f64 } else { f64::NAN },
        avg_clustering: if n > 0 { cc / n as f64 } else { 0.0 },
        avg_degree: if n > 0 { 2.0 * m as f64 / n as f64 } else { 0.0 },
        s_metric: s,
    }
}

fn bfs_dist(a: &[Vec<bool>], s: usize) -> Vec<Option<usize>> {
    let n = a.len();
    let mut d = vec![None; n];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for v in 0..n {
            if a[u][v] && d[v].is_none() {
                d[v] = Some(d[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    d
}

/// Betweenness by all-pairs enumeration: for each unordered pair (s, t) and
/// each other node v, add sigma_sv * sigma_vt / sigma_st when v lies on a
/// shortest s-t path.
pub fn brute_betweenness(g: &Graph) -> Vec<f64> {
    let a = adjacency_matrix(g);
    let n = a.len();
    let dist: Vec<Vec<Option<usize>>> = (0..n).map(|s| bfs_dist(&a, s)).collect();
    // path counts by dynamic programming over distance layers
    let sigma: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut order: Vec<usize> = (0..n).filter(|&v| dist[s][v].is_some()).collect();
            order.sort_by_key(|&v| dist[s][v]);
            let mut sg = vec![0.0; n];
            sg[s] = 1.0;
            for &v in &order {
                if v == s {
                    continue;
                }
                let dv = dist[s][v].unwrap();
                sg[v] = (0..n).filter(|&u| a[u][v] && dist[s][u] == Some(dv - 1)).map(|u| sg[u]).sum();
            }
            sg
        })
        .collect();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let Some(dst) = dist[s][t] else { continue };
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                if let (Some(dsv), Some(dvt)) = (dist[s][v], dist[v][t]) {
                    if dsv + dvt == dst {
                        bc[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
                    }
                }
            }
        }
    }
    bc
}

/// Naive multiplexity: for every pair of users, count months in which both
/// appear with the same label.
pub fn naive_multiplexity(labelings: &[CommunityLabeling]) -> BTreeMap<(String, String), u32> {
    let mut users: Vec<String> = labelings.iter().flat_map(|l| l.users.iter().cloned()).collect();
    users.sort();
    users.dedup();
    let maps: Vec<BTreeMap<&str, Community>> = labelings.iter().map(|l| l.label_map()).collect();
    let mut out = BTreeMap::new();
    for i in 0..users.len() {
        for j in i + 1..users.len() {
            let c = maps
                .iter()
                .filter(|m| match (m.get(users[i].as_str()), m.get(users[j].as_str())) {
                    (Some(a), Some(b)) => a == b,
                    _ => false,
                })
                .count() as u32;
            if c > 0 {
                out.insert((users[i].clone(), users[j].clone()), c);
            }
        }
    }
    out
}

pub fn accuracy_up_to_swap(side: &[u8], truth: &[u8]) -> f64 {
    let agree = side.iter().zip(truth).filter(|(a, b)| a == b).count();
    agree.max(side.len() - agree) as f64 / side.len() as f64
}

/// Criterion report line.
pub fn report(id: &str, name: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
}
