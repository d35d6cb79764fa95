//! Structural metrics of a monthly graph. All of them ignore edge weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::powerlaw;

/// Minimum node count for which a power-law exponent is fitted.
pub const MIN_FIT_NODES: usize = 50;

pub fn density(g: &Graph) -> Result<f64> {
    let n = g.n();
    if n < 2 {
        return Err(Error::UndefinedMetric(format!("density needs n >= 2, got {n}")));
    }
    Ok(2.0 * g.m() as f64 / (n as f64 * (n as f64 - 1.0)))
}

pub fn avg_degree(g: &Graph) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    2.0 * g.m() as f64 / g.n() as f64
}

/// Sum over edges of the product of endpoint degrees.
pub fn s_metric(g: &Graph) -> f64 {
    g.edges()
        .map(|(u, v, _)| g.degree(u as usize) as u128 * g.degree(v as usize) as u128)
        .sum::<u128>() as f64
}

/// Number of triangles through each node.
pub fn triangles(g: &Graph, exec: Execution) -> Vec<u64> {
    exec.map_range(g.n(), |v| {
        let nv = g.neighbors(v);
        // each triangle {v,u,w} is seen from u and from w
        let twice: u64 = nv.iter().map(|&u| sorted_intersection(nv, g.neighbors(u as usize))).sum();
        twice / 2
    })
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Local clustering coefficient per node; nodes of degree < 2 get 0.
pub fn local_clustering(g: &Graph, exec: Execution) -> Vec<f64> {
    triangles(g, exec)
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            let d = g.degree(v) as f64;
            if d < 2.0 {
                0.0
            } else {
                2.0 * t as f64 / (d * (d - 1.0))
            }
        })
        .collect()
}

pub fn avg_clustering(g: &Graph) -> f64 {
    avg_clustering_with(g, Execution::default())
}

pub fn avg_clustering_with(g: &Graph, exec: Execution) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    // Terms are accumulated as double-double values so that the mean is
    // correctly rounded even when the local coefficients are not exact.
    let tri = triangles(g, exec);
    let mut acc = (0.0, 0.0);
    for (v, &t) in tri.iter().enumerate() {
        let d = g.degree(v) as f64;
        if d >= 2.0 {
            acc = dd_add(acc, dd_div(2.0 * t as f64, d * (d - 1.0)));
        }
    }
    let (hi, lo) = acc;
    let (q, r) = dd_div(hi, g.n() as f64);
    q + (r + lo / g.n() as f64)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn dd_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    let e = e + a.1 + b.1;
    let hi = s + e;
    (hi, e - (hi - s))
}

/// `a / b` as quotient plus remainder term.
fn dd_div(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    (q, (-q).mul_add(b, a) / b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeHistogram {
    /// `(degree, node count)` in increasing degree order.
    pub counts: Vec<(usize, usize)>,
    /// Discrete maximum-likelihood exponent with `d_min = 1`.
    pub alpha: Option<f64>,
}

pub fn degree_histogram(g: &Graph, fit: bool) -> DegreeHistogram {
    let degrees: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut sorted = degrees.clone();
    sorted.sort_unstable();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for d in sorted {
        match counts.last_mut() {
            Some((k, c)) if *k == d => *c += 1,
            _ => counts.push((d, 1)),
        }
    }
    let alpha = if !fit {
        None
    } else if g.n() < MIN_FIT_NODES {
        log::warn!(
            "month {}: {} nodes is too few for a power-law fit (need {MIN_FIT_NODES})",
            g.month(),
            g.n()
        );
        None
    } else {
        powerlaw::fit_alpha_from_counts(&counts)
    };
    DegreeHistogram { counts, alpha }
}

/// One row of the monthly metrics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub month: u32,
    pub n: usize,
    pub m: usize,
    pub gc_fraction: f64,
    pub density: Option<f64>,
    pub avg_clustering: f64,
    pub avg_degree: f64,
    pub s_metric: f64,
    pub alpha: Option<f64>,
}

/// Metrics of a giant component. `gc_fraction` comes from the caller.
pub fn metrics_row(gc: &Graph, gc_fraction: f64, exec: Execution) -> MetricsRow {
    MetricsRow {
        month: gc.month(),
        n: gc.n(),
        m: gc.m(),
        gc_fraction,
        density: density(gc).ok(),
        avg_clustering: avg_clustering_with(gc, exec),
        avg_degree: avg_degree(gc),
        s_metric: s_metric(gc),
        alpha: degree_histogram(gc, true).alpha,
    }
}
