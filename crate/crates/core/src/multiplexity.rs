//! Co-membership counts across monthly labelings and the core components of
//! their threshold graphs.
//!
//! Only users labeled in at least `k_min` months enter the matrix: a pair
//! can share a label in at most `min(activity_i, activity_j)` months, so no
//! pair reaching `k_min` is lost.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::UserMeta;
use crate::leaning::{Community, CommunityLabeling};

/// Below this share of members with metadata the statistics are flagged.
pub const MIN_META_COVERAGE: f64 = 0.9;

/// Per-user month sets as bit masks, one mask per label.
#[derive(Clone, Debug)]
struct Activity {
    novax: Vec<u64>,
    provax: Vec<u64>,
}

fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// Sparse symmetric co-membership counts over the restricted universe.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexityMatrix {
    /// Number of months `T`.
    pub months: u32,
    pub k_min: u32,
    /// Users ever labeled, before the activity restriction.
    pub universe_size: usize,
    /// Restricted users, sorted.
    pub users: Vec<String>,
    /// Months labeled NoVax / ProVax, per restricted user.
    pub novax_months: Vec<u32>,
    pub provax_months: Vec<u32>,
    /// Row `i` holds `(j, M(i, j))` for `j > i` with a nonzero count.
    rows: Vec<Vec<(u32, u32)>>,
}

impl MultiplexityMatrix {
    pub fn activity(&self, i: usize) -> u32 {
        self.novax_months[i] + self.provax_months[i]
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.users.binary_search_by(|u| u.as_str().cmp(user)).ok()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b {
            return 0;
        }
        let row = &self.rows[a];
        row.binary_search_by_key(&(b as u32), |&(k, _)| k).map_or(0, |p| row[p].1)
    }

    /// All stored pairs `(i, j, count)` with `i < j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, c)| (i, j as usize, c)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

pub fn build_restricted_multiplexity(labelings: &[CommunityLabeling], k_min: u32) -> Result<MultiplexityMatrix> {
    build_restricted_multiplexity_with(labelings, k_min, Execution::default())
}

pub fn build_restricted_multiplexity_with(
    labelings: &[CommunityLabeling],
    k_min: u32,
    exec: Execution,
) -> Result<MultiplexityMatrix> {
    let months = labelings.len() as u32;
    if k_min < 1 || k_min > months {
        return Err(Error::Argument(format!("k_min must lie in [1, {months}], got {k_min}")));
    }
    let words = labelings.len().div_ceil(64);
    let mut acts: BTreeMap<&str, Activity> = BTreeMap::new();
    for (t, l) in labelings.iter().enumerate() {
        for (u, &c) in l.users.iter().zip(&l.labels) {
            let a = acts.entry(u.as_str()).or_insert_with(|| Activity {
                novax: vec![0; words],
                provax: vec![0; words],
            });
            let mask = match c {
                Community::NoVax => &mut a.novax,
                Community::ProVax => &mut a.provax,
            };
            mask[t / 64] |= 1 << (t % 64);
        }
    }
    let universe_size = acts.len();
    let ones = |m: &[u64]| m.iter().map(|w| w.count_ones()).sum::<u32>();
    let kept: Vec<(&str, Activity)> = acts
        .into_iter()
        .filter(|(_, a)| ones(&a.novax) + ones(&a.provax) >= k_min)
        .collect();
    let rows = exec.map_range(kept.len(), |i| {
        let a = &kept[i].1;
        let mut row = Vec::new();
        for (j, (_, b)) in kept.iter().enumerate().skip(i + 1) {
            let c = popcount_and(&a.novax, &b.novax) + popcount_and(&a.provax, &b.provax);
            if c > 0 {
                row.push((j as u32, c));
            }
        }
        row
    });
    Ok(MultiplexityMatrix {
        months,
        k_min,
        universe_size,
        users: kept.iter().map(|(u, _)| u.to_string()).collect(),
        novax_months: kept.iter().map(|(_, a)| ones(&a.novax)).collect(),
        provax_months: kept.iter().map(|(_, a)| ones(&a.provax)).collect(),
        rows,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentStats {
    /// Share of members found in the metadata.
    pub meta_coverage: f64,
    pub avg_followers: Option<f64>,
    pub verified_fraction: Option<f64>,
    /// Up to three members with the most followers, most first.
    pub top_followers: Vec<(String, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreComponent {
    pub threshold: u32,
    pub members: Vec<String>,
    /// Share of member-months labeled NoVax and ProVax.
    pub composition: (f64, f64),
    pub stats: ComponentStats,
}

impl CoreComponent {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Label holding the larger share of member-months; ties go to NoVax.
    pub fn majority(&self) -> Community {
        if self.composition.0 >= self.composition.1 {
            Community::NoVax
        } else {
            Community::ProVax
        }
    }
}

pub fn member_stats(members: &[String], meta: &BTreeMap<String, UserMeta>) -> ComponentStats {
    let known: Vec<&UserMeta> = members.iter().filter_map(|u| meta.get(u)).collect();
    let coverage = if members.is_empty() { 0.0 } else { known.len() as f64 / members.len() as f64 };
    if coverage < MIN_META_COVERAGE {
        log::warn!(
            "metadata covers {:.1}% of a {}-member component",
            100.0 * coverage,
            members.len()
        );
    }
    let (avg_followers, verified_fraction) = if known.is_empty() {
        (None, None)
    } else {
        let k = known.len() as f64;
        (
            Some(known.iter().map(|m| m.followers as f64).sum::<f64>() / k),
            Some(known.iter().filter(|m| m.verified).count() as f64 / k),
        )
    };
    let mut top: Vec<(String, u64)> = known.iter().map(|m| (m.user_id.clone(), m.followers)).collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    top.truncate(3);
    ComponentStats {
        meta_coverage: coverage,
        avg_followers,
        verified_fraction,
        top_followers: top,
    }
}

/// Connected components (two or more members) of the graph linking pairs
/// with `M(i, j) >= k`, largest first, then by smallest member id.
pub fn threshold_components(
    m: &MultiplexityMatrix,
    k: u32,
    meta: &BTreeMap<String, UserMeta>,
) -> Result<Vec<CoreComponent>> {
    if k > m.months || k < m.k_min {
        return Err(Error::Argument(format!(
            "threshold {k} outside [{}, {}] supported by this matrix",
            m.k_min, m.months
        )));
    }
    let n = m.users.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut linked = vec![false; n];
    for (i, j, c) in m.entries() {
        if c >= k {
            linked[i] = true;
            linked[j] = true;
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in (0..n).filter(|&v| linked[v]) {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    // members are ascending, so the first is the smallest id
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    Ok(comps
        .into_iter()
        .map(|c| {
            let nv: u32 = c.iter().map(|&v| m.novax_months[v]).sum();
            let pv: u32 = c.iter().map(|&v| m.provax_months[v]).sum();
            let total = f64::from(nv + pv);
            let members: Vec<String> = c.iter().map(|&v| m.users[v].clone()).collect();
            CoreComponent {
                threshold: k,
                stats: member_stats(&members, meta),
                members,
                composition: (f64::from(nv) / total, f64::from(pv) / total),
            }
        })
        .collect())
}

/// Whether every member pair of `c` reaches the component's threshold.
pub fn is_clique(m: &MultiplexityMatrix, c: &CoreComponent) -> bool {
    let idx: Vec<usize> = c.members.iter().filter_map(|u| m.index_of(u)).collect();
    idx.len() == c.members.len()
        && idx
            .iter()
            .enumerate()
            .all(|(a, &i)| idx[a + 1..].iter().all(|&j| m.get(i, j) >= c.threshold))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideStats {
    pub community: Community,
    pub components: usize,
    pub members: usize,
    pub stats: ComponentStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdCores {
    pub threshold: u32,
    pub components: Vec<CoreComponent>,
    pub sides: Vec<SideStats>,
}

/// Statistics per core side: members of all components whose majority is
/// that community, pooled.
pub fn core_stats(components: &[CoreComponent], meta: &BTreeMap<String, UserMeta>) -> Vec<SideStats> {
    [Community::NoVax, Community::ProVax]
        .into_iter()
        .map(|side| {
            let comps: Vec<&CoreComponent> = components.iter().filter(|c| c.majority() == side).collect();
            let members: Vec<String> = comps.iter().flat_map(|c| c.members.iter().cloned()).collect();
            SideStats {
                community: side,
                components: comps.len(),
                members: members.len(),
                stats: member_stats(&members, meta),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreReport {
    pub months: u32,
    pub universe_size: usize,
    pub restricted_users: usize,
    pub thresholds: Vec<ThresholdCores>,
}

/// Cores for every threshold in `ks`; the matrix is restricted to the
/// smallest of them.
pub fn core_report(
    labelings: &[CommunityLabeling],
    ks: &[u32],
    meta: &BTreeMap<String, UserMeta>,
    exec: Execution,
) -> Result<CoreReport> {
    let k_min = ks.iter().copied().min().ok_or_else(|| Error::Argument("no thresholds given".into()))?;
    let m = build_restricted_multiplexity_with(labelings, k_min, exec)?;
    let mut thresholds = Vec::new();
    for &k in ks {
        let components = threshold_components(&m, k, meta)?;
        thresholds.push(ThresholdCores {
            threshold: k,
            sides: core_stats(&components, meta),
            components,
        });
    }
    Ok(CoreReport {
        months: m.months,
        universe_size: m.universe_size,
        restricted_users: m.users.len(),
        thresholds,
    })
}

/// Write the `k`-threshold core graph as `nodes.csv` (user_id, component,
/// majority) and `edges.csv` (source, target, count).
pub fn write_core_graph(dir: &Path, m: &MultiplexityMatrix, components: &[CoreComponent]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    nodes.write_record(["user_id", "component", "majority"])?;
    let mut comp_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut threshold = m.months;
    for (ci, c) in components.iter().enumerate() {
        threshold = c.threshold;
        for u in &c.members {
            nodes.write_record([u.as_str(), &ci.to_string(), c.majority().as_str()])?;
            if let Some(i) = m.index_of(u) {
                comp_of.insert(i, ci);
            }
        }
    }
    nodes.flush()?;
    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(["source", "target", "count"])?;
    for (i, j, c) in m.entries() {
        if c >= threshold && comp_of.contains_key(&i) {
            edges.write_record([m.users[i].as_str(), m.users[j].as_str(), &c.to_string()])?;
        }
    }
    edges.flush()?;
    Ok(())
}

pub fn write_core_json<W: Write>(report: &CoreReport, sink: W) -> Result<()> {
    serde_json::to_writer_pretty(sink, report)?;
    Ok(())
}
