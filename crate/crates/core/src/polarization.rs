//! Community edge densities, the polarization score, community proportions
//! and tweet productivity.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ingest::{MonthBucket, TweetRecord};
use crate::leaning::{Community, CommunityLabeling};

/// Unweighted edge densities inside each community and across them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Densities {
    pub v_n: usize,
    pub v_p: usize,
    pub e_n: f64,
    pub e_p: f64,
    pub e_o: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarizationReport {
    pub month: u32,
    #[serde(rename = "V_n")]
    pub v_n: usize,
    #[serde(rename = "V_p")]
    pub v_p: usize,
    #[serde(rename = "E_n")]
    pub e_n: f64,
    #[serde(rename = "E_p")]
    pub e_p: f64,
    #[serde(rename = "E_o")]
    pub e_o: f64,
    #[serde(rename = "S_t")]
    pub s_t: Option<f64>,
    pub tweets_n: u64,
    pub tweets_p: u64,
}

/// Label of every node of `g`, looked up by user id.
pub fn node_labels(g: &Graph, labeling: &CommunityLabeling) -> Result<Vec<Community>> {
    if labeling.users.as_slice() == g.node_ids() {
        return Ok(labeling.labels.clone());
    }
    let map = labeling.label_map();
    g.node_ids()
        .iter()
        .map(|u| {
            map.get(u.as_str())
                .copied()
                .ok_or_else(|| Error::Precondition(format!("month {}: user {u} has no label", labeling.month)))
        })
        .collect()
}

pub fn community_densities(g: &Graph, labeling: &CommunityLabeling) -> Result<Densities> {
    let labels = node_labels(g, labeling)?;
    let v_n = labels.iter().filter(|&&l| l == Community::NoVax).count();
    let v_p = labels.len() - v_n;
    if v_n == 0 || v_p == 0 {
        return Err(Error::DegenerateLabeling(format!(
            "month {}: community sizes {v_n}/{v_p}",
            labeling.month
        )));
    }
    let (mut within_n, mut within_p, mut cross) = (0u64, 0u64, 0u64);
    for (u, v, _) in g.edges() {
        match (labels[u as usize], labels[v as usize]) {
            (Community::NoVax, Community::NoVax) => within_n += 1,
            (Community::ProVax, Community::ProVax) => within_p += 1,
            _ => cross += 1,
        }
    }
    let internal = |edges: u64, size: usize, name: &str| {
        if size < 2 {
            log::warn!("month {}: {name} community has {size} node, internal density set to 0", labeling.month);
            0.0
        } else {
            edges as f64 / (size * (size - 1) / 2) as f64
        }
    };
    Ok(Densities {
        v_n,
        v_p,
        e_n: internal(within_n, v_n, "novax"),
        e_p: internal(within_p, v_p, "provax"),
        e_o: cross as f64 / (v_n * v_p) as f64,
    })
}

pub fn polarization_score(e_n: f64, e_p: f64, e_o: f64) -> Result<f64> {
    let total = e_n + e_p + e_o;
    if total <= 0.0 {
        return Err(Error::UndefinedScore);
    }
    Ok((e_n + e_p - e_o) / total)
}

/// Tweets (originals and retweets) authored by each community's users.
pub fn community_tweets(records: &[TweetRecord], labeling: &CommunityLabeling) -> (u64, u64) {
    let map = labeling.label_map();
    let (mut n, mut p) = (0, 0);
    for r in records {
        match map.get(r.author_id.as_str()) {
            Some(Community::NoVax) => n += 1,
            Some(Community::ProVax) => p += 1,
            None => {}
        }
    }
    (n, p)
}

/// Full per-month row. A zero score denominator leaves `S_t` empty.
pub fn polarize_month(g: &Graph, labeling: &CommunityLabeling, records: &[TweetRecord]) -> Result<PolarizationReport> {
    let d = community_densities(g, labeling)?;
    let s_t = match polarization_score(d.e_n, d.e_p, d.e_o) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("month {}: {e}", labeling.month);
            None
        }
    };
    let (tweets_n, tweets_p) = community_tweets(records, labeling);
    Ok(PolarizationReport {
        month: labeling.month,
        v_n: d.v_n,
        v_p: d.v_p,
        e_n: d.e_n,
        e_p: d.e_p,
        e_o: d.e_o,
        s_t,
        tweets_n,
        tweets_p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProportionRow {
    pub month: u32,
    pub share_n: Option<f64>,
    pub share_p: Option<f64>,
    pub tweets_n: Option<u64>,
    pub tweets_p: Option<u64>,
}

pub fn proportions_and_productivity(
    labelings: &BTreeMap<u32, CommunityLabeling>,
    buckets: &[MonthBucket],
) -> Vec<ProportionRow> {
    buckets
        .iter()
        .map(|b| match labelings.get(&b.month_index) {
            Some(l) if !l.is_empty() => {
                let total = l.len() as f64;
                let (tn, tp) = community_tweets(&b.records, l);
                ProportionRow {
                    month: b.month_index,
                    share_n: Some(l.count(Community::NoVax) as f64 / total),
                    share_p: Some(l.count(Community::ProVax) as f64 / total),
                    tweets_n: Some(tn),
                    tweets_p: Some(tp),
                }
            }
            _ => {
                log::warn!("month {}: no labeling, proportions left empty", b.month_index);
                ProportionRow {
                    month: b.month_index,
                    share_n: None,
                    share_p: None,
                    tweets_n: None,
                    tweets_p: None,
                }
            }
        })
        .collect()
}

pub fn write_polarization_csv<W: Write>(rows: &[PolarizationReport], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaning::Provenance;
    use chrono::{TimeZone, Utc};

    fn graph(n: usize, edges: &[(u32, u32)]) -> Graph {
        let ids = (0..n).map(|i| format!("{i:02}")).collect();
        Graph::from_edges(1, ids, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap()
    }

    fn labeling(g: &Graph, labels: &[Community]) -> CommunityLabeling {
        CommunityLabeling {
            month: 1,
            users: g.node_ids().to_vec(),
            labels: labels.to_vec(),
            provenance: vec![Provenance::Propagated; labels.len()],
        }
    }

    use Community::{NoVax as N, ProVax as P};

    #[test]
    fn disjoint_cliques_are_fully_polarized() {
        let mut e = Vec::new();
        for b in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    e.push((b + i, b + j));
                }
            }
        }
        let g = graph(8, &e);
        let d = community_densities(&g, &labeling(&g, &[N, N, N, N, P, P, P, P])).unwrap();
        assert_eq!((d.e_n, d.e_p, d.e_o), (1.0, 1.0, 0.0));
        assert_eq!(polarization_score(d.e_n, d.e_p, d.e_o).unwrap(), 1.0);
    }

    #[test]
    fn complete_bipartite_is_anti_polarized() {
        let e: Vec<_> = (0..3).flat_map(|u| (3..6).map(move |v| (u, v))).collect();
        let g = graph(6, &e);
        let d = community_densities(&g, &labeling(&g, &[N, N, N, P, P, P])).unwrap();
        assert_eq!((d.e_n, d.e_p, d.e_o), (0.0, 0.0, 1.0));
        assert_eq!(polarization_score(d.e_n, d.e_p, d.e_o).unwrap(), -1.0);
    }

    #[test]
    fn k4_split_evenly() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let d = community_densities(&g, &labeling(&g, &[N, N, P, P])).unwrap();
        assert_eq!((d.e_n, d.e_p, d.e_o), (1.0, 1.0, 1.0));
        assert!((polarization_score(1.0, 1.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert!(matches!(
            community_densities(&g, &labeling(&g, &[N, N, N])),
            Err(Error::DegenerateLabeling(_))
        ));
        assert!(matches!(polarization_score(0.0, 0.0, 0.0), Err(Error::UndefinedScore)));
        // singleton community: internal density falls back to 0
        let d = community_densities(&g, &labeling(&g, &[N, P, P])).unwrap();
        assert_eq!(d.e_n, 0.0);
    }

    fn tweet(id: usize, author: &str, rt: bool) -> TweetRecord {
        TweetRecord {
            tweet_id: id.to_string(),
            author_id: author.into(),
            created_at: Utc.with_ymd_and_hms(2020, 1, 5, 0, 0, 0).unwrap(),
            text: "#novax".into(),
            lang: "it".into(),
            retweet_of_author_id: rt.then(|| "zz".to_string()),
            author_verified: false,
            author_followers: 0,
        }
    }

    #[test]
    fn productivity_counts_retweets() {
        let g = graph(2, &[(0, 1)]);
        let l = labeling(&g, &[N, P]);
        let recs: Vec<_> = (0..5).map(|i| tweet(i, "00", i < 2)).collect();
        assert_eq!(community_tweets(&recs, &l), (5, 0));
    }

    #[test]
    fn proportions_table() {
        let users: Vec<String> = (0..20).map(|i| format!("{i:02}")).collect();
        let labels: Vec<_> = (0..20).map(|i| if i < 10 { N } else { P }).collect();
        let l = CommunityLabeling {
            month: 1,
            users: users.clone(),
            labels,
            provenance: vec![Provenance::Propagated; 20],
        };
        let mut recs = Vec::new();
        for (i, u) in users.iter().enumerate() {
            let k = if i < 10 { 1 } else { 2 };
            for j in 0..k {
                recs.push(tweet(i * 10 + j, u, false));
            }
        }
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let end = Utc.with_ymd_and_hms(2020, 2, 1, 0, 0, 0).unwrap();
        let buckets = vec![
            MonthBucket { month_index: 1, start, end, records: recs },
            MonthBucket { month_index: 2, start: end, end, records: Vec::new() },
        ];
        let rows = proportions_and_productivity(&BTreeMap::from([(1, l)]), &buckets);
        assert_eq!(rows[0].tweets_n, Some(10));
        assert_eq!(rows[0].tweets_p, Some(20));
        assert_eq!(rows[0].share_n, Some(0.5));
        assert_eq!(rows[1].share_n, None);
    }

    #[test]
    fn three_seven_split() {
        let g = graph(10, &(0..9).map(|i| (i, i + 1)).collect::<Vec<_>>());
        let labels: Vec<_> = (0..10).map(|i| if i < 3 { N } else { P }).collect();
        let l = labeling(&g, &labels);
        let d = community_densities(&g, &l).unwrap();
        assert_eq!((d.v_n, d.v_p), (3, 7));
        assert_eq!(d.v_n as f64 / 10.0, 0.3);
    }
}
