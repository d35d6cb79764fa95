//! Synthetic fixtures: planted two-block graphs, stable-community labelings,
//! tweet streams, and an exhaustive balanced-cut oracle for small graphs.

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ingest::TweetRecord;
use crate::leaning::{Community, CommunityLabeling, Provenance};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedSpec {
    pub sizes: (usize, usize),
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub graph: Graph,
    /// Block (0 or 1) of every node of `graph`.
    pub truth: Vec<u8>,
}

/// Visit the successes of `len` independent Bernoulli(`p`) trials, skipping
/// ahead geometrically so the cost is proportional to the number of hits.
fn bernoulli_hits<R: Rng, F: FnMut(usize)>(len: usize, p: f64, rng: &mut R, mut hit: F) {
    if p <= 0.0 || len == 0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(hit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.gen::<f64>();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - i) as f64 {
            return;
        }
        i += skip as usize;
        hit(i);
        i += 1;
        if i >= len {
            return;
        }
    }
}

/// Two-block random graph. Nodes `0..n1` form block 0, the rest block 1;
/// isolated nodes are dropped from both the graph and the truth. User ids are
/// `u` followed by the zero-padded generation index.
pub fn planted_partition(spec: &PlantedSpec) -> Result<Planted> {
    let (n1, n2) = spec.sizes;
    if n1 == 0 || n2 == 0 {
        return Err(Error::Argument("block sizes must be at least 1".into()));
    }
    for p in [spec.p_in, spec.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Argument(format!("edge probability {p} outside [0, 1]")));
        }
    }
    if spec.p_out * (n1 * n2) as f64 > 0.0 && spec.p_out * ((n1 * n2) as f64) < 3.0 {
        log::warn!("planted graph: expected cross edges below 3, graph may be disconnected");
    }
    let n = n1 + n2;
    let block = |v: usize| u8::from(v >= n1);
    let mut rng = rng::seeded(spec.seed);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for u in 0..n {
        // within-block partners after u
        let end = if block(u) == 0 { n1 } else { n };
        bernoulli_hits(end - u - 1, spec.p_in, &mut rng, |k| edges.push((u as u32, (u + 1 + k) as u32)));
        if block(u) == 0 {
            bernoulli_hits(n2, spec.p_out, &mut rng, |k| edges.push((u as u32, (n1 + k) as u32)));
        }
    }
    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u as usize] += 1;
        degree[v as usize] += 1;
    }
    let width = n.to_string().len().max(5);
    let mut remap = vec![u32::MAX; n];
    let mut ids = Vec::new();
    let mut truth = Vec::new();
    for v in 0..n {
        if degree[v] > 0 {
            remap[v] = ids.len() as u32;
            ids.push(format!("u{v:0width$}"));
            truth.push(block(v));
        }
    }
    let graph = Graph::from_edges(0, ids, edges.iter().map(|&(u, v)| (remap[u as usize], remap[v as usize], 1)))?;
    Ok(Planted { graph, truth })
}

/// Exhaustive minimum cut over all two-sided assignments whose smaller side
/// has at least `min(ceil(beta (1 - eps) n), floor(n / 2))` nodes.
pub fn brute_force_min_balanced_cut(g: &Graph, beta: f64, epsilon: f64) -> Result<(u64, Vec<u8>)> {
    let n = g.n();
    if n > 16 {
        return Err(Error::Argument(format!("exhaustive search refused for n = {n} > 16")));
    }
    if n < 2 {
        return Err(Error::Argument("need at least two nodes".into()));
    }
    let bound = {
        let exact = beta * (1.0 - epsilon) * n as f64;
        let mut b = 0usize;
        while (b as f64) < exact - 1e-9 {
            b += 1;
        }
        b.min(n / 2)
    };
    let edges: Vec<(usize, usize, u64)> = g.edges().map(|(u, v, w)| (u as usize, v as usize, w)).collect();
    let mut best: Option<(u64, u32)> = None;
    // node 0 stays on side 0; the mirror assignments have equal cut
    for mask in 0u32..(1 << (n - 1)) {
        let full = mask << 1;
        let ones = full.count_ones() as usize;
        if ones.min(n - ones) < bound {
            continue;
        }
        let cut: u64 = edges
            .iter()
            .filter(|&&(u, v, _)| (full >> u) & 1 != (full >> v) & 1)
            .map(|&(_, _, w)| w)
            .sum();
        if best.map_or(true, |(c, _)| cut < c) {
            best = Some((cut, full));
        }
    }
    let (cut, mask) = best.expect("some assignment meets the bound");
    Ok((cut, (0..n).map(|v| ((mask >> v) & 1) as u8).collect()))
}

#[derive(Clone, Debug)]
pub struct SyntheticLabelings {
    pub labelings: Vec<CommunityLabeling>,
    /// Members of each community, in the order the communities were given.
    pub communities: Vec<Vec<String>>,
    /// Users active in every month.
    pub always_active: Vec<String>,
}

/// Stable community membership over `months` months, each user independently
/// inactive in a month with probability `churn`.
pub fn synthetic_labelings(
    months: u32,
    communities: &[(usize, Community)],
    churn: f64,
    seed: u64,
) -> Result<SyntheticLabelings> {
    if !(0.0..=1.0).contains(&churn) {
        return Err(Error::Argument(format!("churn {churn} outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let members: Vec<Vec<String>> = communities
        .iter()
        .enumerate()
        .map(|(c, &(size, _))| (0..size).map(|i| format!("c{c}_{i:04}")).collect())
        .collect();
    let mut active_months = vec![vec![0u32; 0]; 0];
    for m in &members {
        active_months.push(vec![0; m.len()]);
    }
    let mut labelings = Vec::with_capacity(months as usize);
    for month in 1..=months {
        let mut rows: Vec<(String, Community)> = Vec::new();
        for (c, &(_, label)) in communities.iter().enumerate() {
            for (i, user) in members[c].iter().enumerate() {
                if rng.gen::<f64>() >= churn {
                    active_months[c][i] += 1;
                    rows.push((user.clone(), label));
                }
            }
        }
        rows.sort();
        let n = rows.len();
        let (users, labels): (Vec<String>, Vec<Community>) = rows.into_iter().unzip();
        labelings.push(CommunityLabeling {
            month,
            users,
            labels,
            provenance: vec![Provenance::Propagated; n],
        });
    }
    let mut always_active: Vec<String> = members
        .iter()
        .zip(&active_months)
        .flat_map(|(m, a)| m.iter().zip(a).filter(|(_, &k)| k == months).map(|(u, _)| u.clone()))
        .collect();
    always_active.sort();
    Ok(SyntheticLabelings {
        labelings,
        communities: members,
        always_active,
    })
}

/// Parameters of a synthetic two-community tweet stream.
#[derive(Clone, Debug, PartialEq)]
pub struct TweetStreamSpec {
    pub range_start: NaiveDate,
    pub months: u32,
    /// Users per community: NoVax first, then ProVax.
    pub sizes: (usize, usize),
    /// Per-month probability that a same-community pair exchanges a retweet.
    pub p_in: f64,
    /// Per-month probability for a cross-community pair.
    pub p_out: f64,
    /// Per-month probability that a user is inactive.
    pub churn: f64,
    pub seed: u64,
}

impl Default for TweetStreamSpec {
    fn default() -> Self {
        TweetStreamSpec {
            range_start: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            months: 41,
            sizes: (60, 60),
            p_in: 0.12,
            p_out: 0.004,
            churn: 0.05,
            seed: 1,
        }
    }
}

/// Synthetic tweets: every active user posts one original tweet carrying a
/// community hashtag, and retweets are drawn per pair and month. A few
/// non-Italian and off-topic tweets are mixed in for the filters.
pub fn synthetic_tweets(spec: &TweetStreamSpec) -> Result<Vec<TweetRecord>> {
    let (n1, n2) = spec.sizes;
    let n = n1 + n2;
    let mut rng = rng::seeded(spec.seed);
    let users: Vec<String> = (0..n).map(|i| format!("user{i:05}")).collect();
    let community = |v: usize| if v < n1 { Community::NoVax } else { Community::ProVax };
    let followers: Vec<u64> = (0..n).map(|_| rng.gen_range(10..50_000)).collect();
    let verified: Vec<bool> = (0..n).map(|v| community(v) == Community::ProVax && rng.gen::<f64>() < 0.15).collect();
    let start = spec
        .range_start
        .and_hms_opt(0, 0, 0)
        .ok_or_else(|| Error::Argument("bad range start".into()))?
        .and_utc();
    let mut out = Vec::new();
    let mut next_id = 0u64;
    let mut month_start = start;
    for month in 0..spec.months {
        let month_end = {
            let d = month_start.date_naive();
            let (y, m) = if d.month0() == 11 { (d.year() + 1, 1) } else { (d.year(), d.month() + 1) };
            NaiveDate::from_ymd_opt(y, m, 1).expect("valid date").and_hms_opt(0, 0, 0).expect("midnight").and_utc()
        };
        let span = (month_end - month_start).num_seconds();
        let active: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() >= spec.churn).collect();
        let mut push = |rng: &mut rand_chacha::ChaCha8Rng, author: usize, text: String, rt: Option<usize>, lang: &str| {
            let at = month_start + Duration::seconds(rng.gen_range(0..span));
            out.push(TweetRecord {
                tweet_id: format!("t{next_id:08}"),
                author_id: users[author].clone(),
                created_at: at,
                text,
                lang: lang.to_string(),
                retweet_of_author_id: rt.map(|r| users[r].clone()),
                author_verified: verified[author],
                author_followers: followers[author],
            });
            next_id += 1;
        };
        for v in (0..n).filter(|&v| active[v]) {
            let text = match community(v) {
                Community::NoVax => "il vaccino non serve #novax",
                Community::ProVax => "fatto il vaccino oggi #iomivaccino",
            };
            push(&mut rng, v, text.to_string(), None, "it");
            if rng.gen::<f64>() < 0.05 {
                push(&mut rng, v, "the vaccine debate".to_string(), None, "en");
            }
            if rng.gen::<f64>() < 0.05 {
                push(&mut rng, v, "buongiorno a tutti".to_string(), None, "it");
            }
        }
        for u in 0..n {
            for v in u + 1..n {
                if !(active[u] && active[v]) {
                    continue;
                }
                let p = if community(u) == community(v) { spec.p_in } else { spec.p_out };
                if rng.gen::<f64>() < p {
                    let (a, b) = if rng.gen::<bool>() { (u, v) } else { (v, u) };
                    push(&mut rng, a, format!("RT vaccini: messaggio {month}"), Some(b), "it");
                }
            }
        }
        month_start = month_end;
    }
    Ok(out)
}
