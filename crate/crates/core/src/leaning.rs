//! Ensemble leaning scores, balance tuning, extreme-user selection and
//! nearest-score label propagation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::ingest::TweetRecord;
use crate::partition::{bipartition, DEFAULT_EPSILON};
use crate::rng::hash64;

pub const DEFAULT_RUNS: u32 = 100;
pub const DEFAULT_EXTREME_FRACTION: f64 = 0.10;
/// Largest tolerated share of minority labels among one side's seeds.
pub const MAX_SEED_MIXING: f64 = 0.40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Community {
    NoVax,
    ProVax,
}

impl Community {
    pub fn as_str(self) -> &'static str {
        match self {
            Community::NoVax => "novax",
            Community::ProVax => "provax",
        }
    }

    pub fn other(self) -> Community {
        match self {
            Community::NoVax => Community::ProVax,
            Community::ProVax => Community::NoVax,
        }
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Community {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "novax" => Ok(Community::NoVax),
            "provax" => Ok(Community::ProVax),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "seed-manual")]
    SeedManual,
    #[serde(rename = "propagated")]
    Propagated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SeedManual => "seed-manual",
            Provenance::Propagated => "propagated",
        }
    }
}

/// Per-user ensemble scores for one month, kept as integer counts so that
/// they are exact regardless of evaluation order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeaningScores {
    pub month: u32,
    pub users: Vec<String>,
    /// Number of aligned runs that put each user on side 1.
    pub counts: Vec<u32>,
    pub runs: u32,
    pub reference_seed: u64,
    pub beta: f64,
}

impl LeaningScores {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn score(&self, v: usize) -> f64 {
        f64::from(self.counts[v]) / f64::from(self.runs)
    }

    pub fn scores(&self) -> Vec<f64> {
        (0..self.len()).map(|v| self.score(v)).collect()
    }

    /// Score outside the central band `[0.025, 0.975]`, i.e. `score <= 0.025`
    /// or `score >= 0.975`, evaluated on the integer counts.
    pub fn is_confident(&self, v: usize) -> bool {
        let (c, r) = (u64::from(self.counts[v]), u64::from(self.runs));
        40 * c <= r || 40 * c >= 39 * r
    }

    pub fn confident_count(&self) -> usize {
        (0..self.len()).filter(|&v| self.is_confident(v)).count()
    }
}

/// Align every run to run 0 (complementing runs that agree with it on fewer
/// than half of the nodes) and count side-1 assignments per node.
pub fn aggregate_runs(runs: &[Vec<u8>]) -> Vec<u32> {
    let Some(reference) = runs.first() else {
        return Vec::new();
    };
    let n = reference.len();
    let mut counts = vec![0u32; n];
    for run in runs {
        let agree = run.iter().zip(reference).filter(|(a, b)| a == b).count();
        let flip = 2 * agree < n;
        for (c, &s) in counts.iter_mut().zip(run) {
            if (s == 1) != flip {
                *c += 1;
            }
        }
    }
    counts
}

pub fn ensemble_leaning(g: &Graph, beta: f64, runs: u32, master_seed: u64) -> Result<LeaningScores> {
    ensemble_leaning_with(g, beta, DEFAULT_EPSILON, runs, master_seed, Execution::default())
}

/// Run `runs` seeded bipartitions of `g` and turn them into leaning scores.
/// Run `r` uses seed `hash64(master_seed, month, r)`.
pub fn ensemble_leaning_with(
    g: &Graph,
    beta: f64,
    epsilon: f64,
    runs: u32,
    master_seed: u64,
    exec: Execution,
) -> Result<LeaningScores> {
    if runs == 0 {
        return Err(Error::Argument("ensemble needs at least one run".into()));
    }
    let month = g.month();
    let sides: Vec<Result<Vec<u8>>> = exec.map_range(runs as usize, |r| {
        bipartition(g, beta, epsilon, hash64(master_seed, month, r as u32)).map(|p| p.side)
    });
    let sides = sides.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LeaningScores {
        month,
        users: g.node_ids().to_vec(),
        counts: aggregate_runs(&sides),
        runs,
        reference_seed: hash64(master_seed, month, 0),
        beta,
    })
}

pub fn default_beta_grid() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 0.05).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceTuning {
    pub beta: f64,
    /// Confident-user count for every grid value, in grid order.
    pub confident: Vec<(f64, usize)>,
    /// Scores obtained at the selected `beta`.
    pub scores: LeaningScores,
}

/// Pick the balance target that maximizes the number of confident users;
/// ties go to the larger (more balanced) value.
pub fn tune_balance(
    g: &Graph,
    grid: &[f64],
    runs: u32,
    master_seed: u64,
    epsilon: f64,
    exec: Execution,
) -> Result<BalanceTuning> {
    if grid.is_empty() {
        return Err(Error::Argument("balance grid is empty".into()));
    }
    let mut confident = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, LeaningScores)> = None;
    for &beta in grid {
        let scores = ensemble_leaning_with(g, beta, epsilon, runs, master_seed, exec)?;
        let count = scores.confident_count();
        confident.push((beta, count));
        let better = match &best {
            None => true,
            Some((bc, bb, _)) => count > *bc || (count == *bc && beta > *bb),
        };
        if better {
            best = Some((count, beta, scores));
        }
    }
    let (_, beta, scores) = best.expect("grid is non-empty");
    Ok(BalanceTuning {
        beta,
        confident,
        scores,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Extreme {
    pub user_id: String,
    pub node: usize,
    /// 0 for the low-score tail, 1 for the high-score tail.
    pub tail: u8,
    pub count: u32,
}

/// The `fraction / 2` lowest-scoring and `fraction / 2` highest-scoring users
/// (each rounded up), ties ranked by user id. A user is never in both tails.
pub fn select_extremes(scores: &LeaningScores, fraction: f64) -> Result<Vec<Extreme>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!("extreme fraction must lie in (0, 1], got {fraction}")));
    }
    let n = scores.len();
    let per_tail = ((n as f64 * fraction / 2.0) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores.counts[a].cmp(&scores.counts[b]).then_with(|| scores.users[a].cmp(&scores.users[b])));
    let low: Vec<usize> = order.iter().copied().take(per_tail.min(n)).collect();
    let mut taken = vec![false; n];
    for &v in &low {
        taken[v] = true;
    }
    order.sort_by(|&a, &b| scores.counts[b].cmp(&scores.counts[a]).then_with(|| scores.users[a].cmp(&scores.users[b])));
    let high: Vec<usize> = order.into_iter().filter(|&v| !taken[v]).take(per_tail).collect();
    let make = |v: usize, tail: u8| Extreme {
        user_id: scores.users[v].clone(),
        node: v,
        tail,
        count: scores.counts[v],
    };
    Ok(low.into_iter().map(|v| make(v, 0)).chain(high.into_iter().map(|v| make(v, 1))).collect())
}

/// Per-month community assignment over the nodes of a graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunityLabeling {
    pub month: u32,
    pub users: Vec<String>,
    pub labels: Vec<Community>,
    pub provenance: Vec<Provenance>,
}

impl CommunityLabeling {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn count(&self, c: Community) -> usize {
        self.labels.iter().filter(|&&l| l == c).count()
    }

    pub fn label_map(&self) -> BTreeMap<&str, Community> {
        self.users.iter().map(String::as_str).zip(self.labels.iter().copied()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Propagation {
    pub labeling: CommunityLabeling,
    /// Majority seed label among seeds on side 0 and side 1 (by score).
    pub side_majority: [Option<Community>; 2],
    /// Seed users not present in the month's graph.
    pub skipped_seeds: Vec<String>,
}

/// Seeds keep their label; every other user takes the label of the seed with
/// the closest score, ties to the seed with the smaller user id.
pub fn propagate_labels(scores: &LeaningScores, seed_labels: &BTreeMap<String, Community>) -> Result<Propagation> {
    if seed_labels.is_empty() {
        return Err(Error::Config(format!("month {}: no seed labels", scores.month)));
    }
    let index: BTreeMap<&str, usize> = scores.users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let mut skipped = Vec::new();
    // count -> (smallest user id with that count, its label)
    let mut by_count: BTreeMap<u32, (&str, Community)> = BTreeMap::new();
    let mut side_tally = [[0usize; 2]; 2];
    let mut is_seed = vec![None; scores.len()];
    for (user, &label) in seed_labels {
        let Some(&v) = index.get(user.as_str()) else {
            log::warn!("month {}: seed user {user} is not in the graph, skipped", scores.month);
            skipped.push(user.clone());
            continue;
        };
        is_seed[v] = Some(label);
        let c = scores.counts[v];
        let side = usize::from(2 * u64::from(c) > u64::from(scores.runs));
        side_tally[side][label as usize] += 1;
        by_count
            .entry(c)
            .and_modify(|e| {
                if user.as_str() < e.0 {
                    *e = (user.as_str(), label);
                }
            })
            .or_insert((user.as_str(), label));
    }
    if by_count.is_empty() {
        return Err(Error::Config(format!("month {}: none of the seed users is in the graph", scores.month)));
    }
    let mut side_majority = [None; 2];
    for (side, tally) in side_tally.iter().enumerate() {
        let total = tally[0] + tally[1];
        if total == 0 {
            continue;
        }
        let (major, minor) = if tally[0] >= tally[1] {
            (Community::NoVax, tally[1])
        } else {
            (Community::ProVax, tally[0])
        };
        if minor as f64 > MAX_SEED_MIXING * total as f64 {
            return Err(Error::Config(format!(
                "month {}: seeds on side {side} are mixed ({} novax / {} provax)",
                scores.month, tally[0], tally[1]
            )));
        }
        side_majority[side] = Some(major);
    }

    let nearest = |c: u32| -> Community {
        let below = by_count.range(..=c).next_back();
        let above = by_count.range(c..).next();
        match (below, above) {
            (Some((&bc, &(bu, bl))), Some((&ac, &(au, al)))) => {
                let (db, da) = (c - bc, ac - c);
                if db < da || (db == da && bu <= au) {
                    bl
                } else {
                    al
                }
            }
            (Some((_, &(_, l))), None) | (None, Some((_, &(_, l)))) => l,
            (None, None) => unreachable!("at least one seed"),
        }
    };
    let mut labels = Vec::with_capacity(scores.len());
    let mut provenance = Vec::with_capacity(scores.len());
    for v in 0..scores.len() {
        match is_seed[v] {
            Some(l) => {
                labels.push(l);
                provenance.push(Provenance::SeedManual);
            }
            None => {
                labels.push(nearest(scores.counts[v]));
                provenance.push(Provenance::Propagated);
            }
        }
    }
    Ok(Propagation {
        labeling: CommunityLabeling {
            month: scores.month,
            users: scores.users.clone(),
            labels,
            provenance,
        },
        side_majority,
        skipped_seeds: skipped,
    })
}

/// Share of users per score bin `0.00, 0.01, ..., 1.00` (nearest bin).
pub fn score_heatmap(scores: &LeaningScores) -> Vec<(f64, f64)> {
    let mut bins = [0usize; 101];
    let r = u64::from(scores.runs);
    for &c in &scores.counts {
        let bin = (u64::from(c) * 100 + r / 2) / r;
        bins[bin as usize] += 1;
    }
    let n = scores.len().max(1) as f64;
    bins.iter().enumerate().map(|(i, &b)| (i as f64 / 100.0, b as f64 / n)).collect()
}

/// Hashtags suggesting vaccine skepticism, for the heuristic seed fallback.
pub const DEFAULT_ANTI_TAGS: [&str; 4] = ["#novax", "#nogreenpass", "#dittaturasanitaria", "#iononmivaccino"];
/// Hashtags suggesting vaccine advocacy, for the heuristic seed fallback.
pub const DEFAULT_PRO_TAGS: [&str; 4] = ["#iomivaccino", "#iomiovaccino", "#vaccinoanticovid", "#provax"];

/// Approximate seed labels for `extremes` from the hashtags in their own
/// tweets of the month: more anti-tag tweets than pro-tag tweets gives
/// NoVax, the converse ProVax, anything else no label.
pub fn heuristic_seed_labels(
    extremes: &[Extreme],
    records: &[TweetRecord],
    pro_tags: &[String],
    anti_tags: &[String],
) -> BTreeMap<String, Community> {
    let pro: Vec<String> = pro_tags.iter().map(|t| t.to_lowercase()).collect();
    let anti: Vec<String> = anti_tags.iter().map(|t| t.to_lowercase()).collect();
    let mut tally: BTreeMap<&str, (usize, usize)> = extremes.iter().map(|e| (e.user_id.as_str(), (0, 0))).collect();
    for r in records {
        if let Some(t) = tally.get_mut(r.author_id.as_str()) {
            let text = r.text.to_lowercase();
            if anti.iter().any(|a| text.contains(a.as_str())) {
                t.0 += 1;
            }
            if pro.iter().any(|p| text.contains(p.as_str())) {
                t.1 += 1;
            }
        }
    }
    tally
        .into_iter()
        .filter_map(|(u, (a, p))| match a.cmp(&p) {
            std::cmp::Ordering::Greater => Some((u.to_string(), Community::NoVax)),
            std::cmp::Ordering::Less => Some((u.to_string(), Community::ProVax)),
            std::cmp::Ordering::Equal => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores_from(counts: &[u32], runs: u32) -> LeaningScores {
        LeaningScores {
            month: 1,
            users: (0..counts.len()).map(|i| format!("u{i:03}")).collect(),
            counts: counts.to_vec(),
            runs,
            reference_seed: 0,
            beta: 0.5,
        }
    }

    #[test]
    fn alignment_flips_minority_agreement_runs() {
        let runs = vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0], vec![0, 1, 1, 1]];
        assert_eq!(aggregate_runs(&runs), vec![0, 1, 3, 3]);
    }

    #[test]
    fn exactly_half_agreement_is_not_flipped() {
        let runs = vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]];
        assert_eq!(aggregate_runs(&runs), vec![0, 1, 1, 2]);
    }

    #[test]
    fn complemented_odd_runs_give_same_counts() {
        // odd node count: agreement can never be exactly one half
        let runs: Vec<Vec<u8>> = (0..9).map(|r| (0..13).map(|v| ((v * 7 + r * 3) % 5 < 2) as u8).collect()).collect();
        let flipped: Vec<Vec<u8>> = runs
            .iter()
            .enumerate()
            .map(|(r, s)| if r % 2 == 1 { s.iter().map(|&x| 1 - x).collect() } else { s.clone() })
            .collect();
        assert_eq!(aggregate_runs(&runs), aggregate_runs(&flipped));
        // complementing every run, the reference included, mirrors the counts
        let all: Vec<Vec<u8>> = runs.iter().map(|s| s.iter().map(|&x| 1 - x).collect()).collect();
        let mirrored: Vec<u32> = aggregate_runs(&runs).iter().map(|&c| 9 - c).collect();
        assert_eq!(aggregate_runs(&all), mirrored);
    }

    #[test]
    fn confidence_band_edges() {
        let s = scores_from(&[0, 2, 3, 97, 98, 100, 50], 80);
        // 2/80 = 0.025 is confident, 3/80 is not
        assert!(s.is_confident(0));
        assert!(s.is_confident(1));
        assert!(!s.is_confident(2));
        let s = scores_from(&[97, 98], 100);
        assert!(!s.is_confident(0));
        assert!(s.is_confident(1));
    }

    #[test]
    fn extremes_of_hundred_users() {
        let counts: Vec<u32> = (0..100).collect();
        let e = select_extremes(&scores_from(&counts, 100), 0.10).unwrap();
        let low: Vec<usize> = e.iter().filter(|x| x.tail == 0).map(|x| x.node).collect();
        let high: Vec<usize> = e.iter().filter(|x| x.tail == 1).map(|x| x.node).collect();
        assert_eq!(low, vec![0, 1, 2, 3, 4]);
        assert_eq!(high, vec![99, 98, 97, 96, 95]);
    }

    #[test]
    fn extremes_with_identical_scores_use_user_order() {
        let e = select_extremes(&scores_from(&[50; 100], 100), 0.10).unwrap();
        let nodes: Vec<usize> = e.iter().map(|x| x.node).collect();
        assert_eq!(nodes, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn extremes_rank_enumeration() {
        let s = scores_from(&[0, 0, 0, 50, 50, 50, 50, 100, 100, 100], 100);
        let e = select_extremes(&s, 0.6).unwrap();
        let mut nodes: Vec<usize> = e.iter().map(|x| x.node).collect();
        nodes.sort();
        assert_eq!(nodes, vec![0, 1, 2, 7, 8, 9]);
        assert!(select_extremes(&s, 0.0).is_err());
    }

    #[test]
    fn propagation_takes_nearest_seed() {
        let s = scores_from(&[1, 99, 40], 100);
        let seeds = BTreeMap::from([("u000".to_string(), Community::NoVax), ("u001".to_string(), Community::ProVax)]);
        let p = propagate_labels(&s, &seeds).unwrap();
        assert_eq!(p.labeling.labels, vec![Community::NoVax, Community::ProVax, Community::NoVax]);
        assert_eq!(p.labeling.provenance[2], Provenance::Propagated);
        assert_eq!(p.labeling.provenance[0], Provenance::SeedManual);
        assert_eq!(p.side_majority, [Some(Community::NoVax), Some(Community::ProVax)]);
    }

    #[test]
    fn propagation_midway_tie_goes_to_smaller_user_id() {
        let s = scores_from(&[10, 90, 50], 100);
        let seeds = BTreeMap::from([("u000".to_string(), Community::ProVax), ("u001".to_string(), Community::NoVax)]);
        let p = propagate_labels(&s, &seeds).unwrap();
        assert_eq!(p.labeling.labels[2], Community::ProVax);
        let seeds = BTreeMap::from([("u000".to_string(), Community::NoVax), ("u001".to_string(), Community::ProVax)]);
        assert_eq!(propagate_labels(&s, &seeds).unwrap().labeling.labels[2], Community::NoVax);
    }

    #[test]
    fn propagation_errors() {
        let s = scores_from(&[1, 99, 40], 100);
        assert!(matches!(propagate_labels(&s, &BTreeMap::new()), Err(Error::Config(_))));
        let absent = BTreeMap::from([("zzz".to_string(), Community::NoVax), ("u000".to_string(), Community::NoVax)]);
        let p = propagate_labels(&s, &absent).unwrap();
        assert_eq!(p.skipped_seeds, vec!["zzz".to_string()]);
        assert!(p.labeling.labels.iter().all(|&l| l == Community::NoVax));
        let s = scores_from(&[0, 1, 2, 98], 100);
        let mixed = BTreeMap::from([("u000".to_string(), Community::NoVax), ("u001".to_string(), Community::ProVax)]);
        assert!(matches!(propagate_labels(&s, &mixed), Err(Error::Config(_))));
    }

    #[test]
    fn heatmap_bins_sum_to_one() {
        let h = score_heatmap(&scores_from(&[0, 0, 50, 100], 100));
        assert_eq!(h.len(), 101);
        assert_eq!(h[0], (0.0, 0.5));
        assert_eq!(h[50], (0.5, 0.25));
        assert_eq!(h[100], (1.0, 0.25));
        assert!((h.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn labels_parse() {
        assert_eq!("NoVax".parse::<Community>().unwrap(), Community::NoVax);
        assert_eq!("provax".parse::<Community>().unwrap(), Community::ProVax);
        assert!("maybe".parse::<Community>().is_err());
    }
}
