//! Betweenness centrality on community subgraphs and the share of
//! high-betweenness nodes per month against a threshold pooled over months.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunks, Execution};
use crate::graph::{giant_component, Graph};
use crate::leaning::{Community, CommunityLabeling};
use crate::polarization::node_labels;

pub const DEFAULT_PERCENTILE: f64 = 0.95;
const SOURCE_CHUNK: usize = 64;

/// Subgraph on the nodes labeled `side`.
pub fn induced_subgraph(g: &Graph, labeling: &CommunityLabeling, side: Community) -> Result<Graph> {
    let labels = node_labels(g, labeling)?;
    let keep: Vec<u32> = (0..g.n() as u32).filter(|&v| labels[v as usize] == side).collect();
    Ok(g.induced(&keep))
}

struct Scratch {
    stack: Vec<u32>,
    queue: std::collections::VecDeque<u32>,
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    acc: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            stack: Vec::with_capacity(n),
            queue: std::collections::VecDeque::with_capacity(n),
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            acc: vec![0.0; n],
        }
    }

    /// One source of Brandes' accumulation into `acc`.
    fn source(&mut self, g: &Graph, s: usize) {
        let Scratch { stack, queue, dist, sigma, delta, acc } = self;
        stack.clear();
        dist.fill(-1);
        sigma.fill(0.0);
        delta.fill(0.0);
        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(s as u32);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            let v = v as usize;
            for &w in g.neighbors(v) {
                let w = w as usize;
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w as u32);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        while let Some(w) = stack.pop() {
            let w = w as usize;
            for &v in g.neighbors(w) {
                let v = v as usize;
                if dist[v] == dist[w] - 1 {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                acc[w] += delta[w];
            }
        }
    }
}

/// Exact unweighted betweenness, each unordered pair counted once.
pub fn betweenness(g: &Graph, exec: Execution) -> Vec<f64> {
    let n = g.n();
    let parts = chunks(n, SOURCE_CHUNK);
    let partials = exec.map_range(parts.len(), |c| {
        let mut s = Scratch::new(n);
        for src in parts[c].clone() {
            s.source(g, src);
        }
        s.acc
    });
    // chunk sums are added in chunk order regardless of scheduling
    let mut out = vec![0.0; n];
    for p in partials {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|x| *x /= 2.0);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonthBetweenness {
    pub month: u32,
    /// Nodes of the induced community subgraph.
    pub n_sub: usize,
    /// Share of those nodes in its largest component, where values live.
    pub component_fraction: f64,
    pub users: Vec<String>,
    pub values: Vec<f64>,
}

pub fn month_betweenness(g: &Graph, labeling: &CommunityLabeling, side: Community, exec: Execution) -> Result<MonthBetweenness> {
    let sub = induced_subgraph(g, labeling, side)?;
    let gc = giant_component(&sub);
    if gc.fraction < 1.0 {
        log::info!(
            "month {}: {side} subgraph disconnected, using largest component ({:.1}% of {} nodes)",
            labeling.month,
            100.0 * gc.fraction,
            sub.n()
        );
    }
    Ok(MonthBetweenness {
        month: labeling.month,
        n_sub: sub.n(),
        component_fraction: gc.fraction,
        users: gc.graph.node_ids().to_vec(),
        values: betweenness(&gc.graph, exec),
    })
}

/// Linear-interpolation percentile of sorted data, `p` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HighBetweennessRow {
    pub month: u32,
    pub n_sub: usize,
    pub pooled_p95: f64,
    pub fraction_high: Option<f64>,
}

/// Share of each month's nodes strictly above the `percentile` of all
/// values pooled across months.
pub fn high_betweenness_series(months: &[MonthBetweenness], percentile: f64) -> Result<Vec<HighBetweennessRow>> {
    if !(0.0..=1.0).contains(&percentile) {
        return Err(Error::Argument(format!("percentile {percentile} outside [0, 1]")));
    }
    let mut pooled: Vec<f64> = months.iter().flat_map(|m| m.values.iter().copied()).collect();
    if pooled.is_empty() {
        return Err(Error::Precondition("no month has a non-empty subgraph".into()));
    }
    pooled.sort_by(f64::total_cmp);
    let threshold = percentile_sorted(&pooled, percentile);
    Ok(months
        .iter()
        .map(|m| HighBetweennessRow {
            month: m.month,
            n_sub: m.n_sub,
            pooled_p95: threshold,
            fraction_high: (!m.values.is_empty())
                .then(|| m.values.iter().filter(|&&x| x > threshold).count() as f64 / m.values.len() as f64),
        })
        .collect())
}

pub fn write_series_csv<W: Write>(rows: &[HighBetweennessRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-node dump: month,user_id,betweenness.
pub fn write_values_csv<W: Write>(months: &[MonthBetweenness], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["month", "user_id", "betweenness"])?;
    for m in months {
        for (u, v) in m.users.iter().zip(&m.values) {
            w.write_record([m.month.to_string(), u.clone(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
