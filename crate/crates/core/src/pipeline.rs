//! End-to-end analysis: records in, report bundle out. Each stage is also
//! exposed on its own so the CLI can run them separately.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::centrality::{high_betweenness_series, month_betweenness, HighBetweennessRow, MonthBetweenness};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{giant_component, GiantComponent, Graph};
use crate::ingest::{self, MonthBucket, TweetRecord, UserMeta};
use crate::leaning::{
    self, propagate_labels, select_extremes, tune_balance, Community, CommunityLabeling, LeaningScores, Provenance,
};
use crate::metrics::{degree_histogram, metrics_row, DegreeHistogram, MetricsRow};
use crate::multiplexity::{core_report, CoreReport};
use crate::polarization::{polarize_month, PolarizationReport};
use crate::report::{self, cross_correlation, CrossCorrelation, ReportBundle, TimeSeries};

/// Seed labels per month.
pub type SeedLabels = BTreeMap<u32, BTreeMap<String, Community>>;

/// CSV `month,user_id,label`.
pub fn read_seed_labels(path: &Path) -> Result<SeedLabels> {
    #[derive(Deserialize)]
    struct Row {
        month: u32,
        user_id: String,
        label: String,
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut out = SeedLabels::new();
    for row in r.deserialize() {
        let row: Row = row?;
        out.entry(row.month).or_default().insert(row.user_id, row.label.parse()?);
    }
    Ok(out)
}

/// Filtered records split into months, with one graph per month.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub buckets: Vec<MonthBucket>,
    pub dropped: usize,
    pub graphs: Vec<Graph>,
    pub meta: BTreeMap<String, UserMeta>,
}

pub fn prepare(records: Vec<TweetRecord>, cfg: &Config) -> Result<Prepared> {
    let kept = ingest::filter_records(records, &cfg.keywords, &cfg.lang);
    let meta = ingest::collect_user_meta(&kept);
    let bucketing = ingest::bucket_by_month(kept, cfg.range_start, cfg.range_end)?;
    if bucketing.dropped > 0 {
        log::info!("{} records outside the date range dropped", bucketing.dropped);
    }
    let graphs = bucketing.buckets.iter().map(ingest::build_retweet_graph).collect();
    Ok(Prepared {
        buckets: bucketing.buckets,
        dropped: bucketing.dropped,
        graphs,
        meta,
    })
}

#[derive(Clone, Debug)]
pub struct StructureTables {
    pub giants: Vec<GiantComponent>,
    pub metrics: Vec<MetricsRow>,
    pub degrees: Vec<(u32, DegreeHistogram)>,
}

/// Giant components and their metrics, one entry per month.
pub fn structure(graphs: &[Graph], exec: Execution) -> StructureTables {
    let giants: Vec<GiantComponent> = graphs.iter().map(giant_component).collect();
    let metrics = giants.iter().map(|gc| metrics_row(&gc.graph, gc.fraction, exec)).collect();
    let degrees = giants.iter().map(|gc| (gc.graph.month(), degree_histogram(&gc.graph, true))).collect();
    StructureTables { giants, metrics, degrees }
}

/// Tuned ensemble scores per month; months whose giant component has fewer
/// than two nodes are skipped.
pub fn leaning_scores(giants: &[GiantComponent], cfg: &Config, exec: Execution) -> Result<Vec<LeaningScores>> {
    let mut out = Vec::new();
    for gc in giants {
        let g = &gc.graph;
        if g.n() < 2 {
            log::warn!("month {}: giant component has {} node(s), no partition", g.month(), g.n());
            continue;
        }
        let t = tune_balance(g, &cfg.beta_grid, cfg.runs, cfg.seed, cfg.epsilon, exec)?;
        log::info!(
            "month {}: beta* = {}, {} of {} users confident",
            g.month(),
            t.beta,
            t.scores.confident_count(),
            g.n()
        );
        out.push(t.scores);
    }
    Ok(out)
}

/// Labels every scored month. Seeds come from `seeds` when given; otherwise
/// the extreme users are labeled from their hashtags. A month whose
/// heuristic seeds fail is left unlabeled.
pub fn label_months(
    scores: &[LeaningScores],
    seeds: Option<&SeedLabels>,
    buckets: &[MonthBucket],
    cfg: &Config,
) -> Result<Vec<Option<CommunityLabeling>>> {
    let mut out = Vec::new();
    for s in scores {
        let labeling = match seeds {
            Some(all) => match all.get(&s.month) {
                Some(month_seeds) => Some(propagate_labels(s, month_seeds)?.labeling),
                None => {
                    log::warn!("month {}: no seed labels in the seed file", s.month);
                    None
                }
            },
            None => {
                let extremes = select_extremes(s, cfg.extreme_fraction)?;
                let records = buckets
                    .iter()
                    .find(|b| b.month_index == s.month)
                    .map_or(&[][..], |b| b.records.as_slice());
                let guessed = leaning::heuristic_seed_labels(&extremes, records, &cfg.pro_tags, &cfg.anti_tags);
                match propagate_labels(s, &guessed) {
                    Ok(p) => Some(p.labeling),
                    Err(e) => {
                        log::warn!("month {}: heuristic seeding failed: {e}", s.month);
                        None
                    }
                }
            }
        };
        out.push(labeling);
    }
    Ok(out)
}

/// Polarization rows for labeled months whose labeling has both sides.
pub fn polarization_rows(
    giants: &[GiantComponent],
    labelings: &[CommunityLabeling],
    buckets: &[MonthBucket],
) -> Result<Vec<PolarizationReport>> {
    let mut rows = Vec::new();
    for l in labelings {
        let Some(gc) = giants.iter().find(|g| g.graph.month() == l.month) else {
            return Err(Error::Precondition(format!("month {}: labeling without a graph", l.month)));
        };
        let records = buckets
            .iter()
            .find(|b| b.month_index == l.month)
            .map_or(&[][..], |b| b.records.as_slice());
        match polarize_month(&gc.graph, l, records) {
            Ok(r) => rows.push(r),
            Err(Error::DegenerateLabeling(m)) => log::warn!("{m}, polarization skipped"),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// One labeling per month `1..=months`, empty where a month is unlabeled.
pub fn full_period(labelings: &[CommunityLabeling], months: u32) -> Vec<CommunityLabeling> {
    (1..=months)
        .map(|m| {
            labelings.iter().find(|l| l.month == m).cloned().unwrap_or(CommunityLabeling {
                month: m,
                users: Vec::new(),
                labels: Vec::new(),
                provenance: Vec::new(),
            })
        })
        .collect()
}

/// Core report over the thresholds that fit the period length.
pub fn cores(
    labelings: &[CommunityLabeling],
    months: u32,
    cfg: &Config,
    meta: &BTreeMap<String, UserMeta>,
    exec: Execution,
) -> Result<CoreReport> {
    let ks: Vec<u32> = cfg.thresholds.iter().copied().filter(|&k| k <= months).collect();
    if ks.len() < cfg.thresholds.len() {
        log::warn!("thresholds above the {months}-month period ignored");
    }
    core_report(&full_period(labelings, months), &ks, meta, exec)
}

pub fn centrality(
    giants: &[GiantComponent],
    labelings: &[CommunityLabeling],
    side: Community,
    percentile: f64,
    exec: Execution,
) -> Result<(Vec<MonthBetweenness>, Vec<HighBetweennessRow>)> {
    let mut months = Vec::new();
    for l in labelings {
        if let Some(gc) = giants.iter().find(|g| g.graph.month() == l.month) {
            months.push(month_betweenness(&gc.graph, l, side, exec)?);
        }
    }
    let rows = high_betweenness_series(&months, percentile)?;
    Ok((months, rows))
}

/// Users per month, the series set against external interest.
pub fn node_count_series(graphs: &[Graph]) -> TimeSeries {
    TimeSeries {
        values: graphs.iter().map(|g| (g.month(), Some(g.n() as f64))).collect(),
    }
}

/// Everything the full run produces.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub prepared: Prepared,
    pub structure: StructureTables,
    pub scores: Vec<LeaningScores>,
    pub labelings: Vec<Option<CommunityLabeling>>,
    pub polarization: Vec<PolarizationReport>,
    pub cores: CoreReport,
    pub betweenness: Vec<MonthBetweenness>,
    pub centrality: Vec<HighBetweennessRow>,
    pub ccf: Option<CrossCorrelation>,
}

pub fn run(
    records: Vec<TweetRecord>,
    cfg: &Config,
    seeds: Option<&SeedLabels>,
    interest: Option<&TimeSeries>,
    exec: Execution,
) -> Result<PipelineOutput> {
    let prepared = prepare(records, cfg)?;
    let months = prepared.buckets.len() as u32;
    let structure = structure(&prepared.graphs, exec);
    let scores = leaning_scores(&structure.giants, cfg, exec)?;
    let labelings = label_months(&scores, seeds, &prepared.buckets, cfg)?;
    let labeled: Vec<CommunityLabeling> = labelings.iter().flatten().cloned().collect();
    let polarization = polarization_rows(&structure.giants, &labeled, &prepared.buckets)?;
    let cores = cores(&labeled, months, cfg, &prepared.meta, exec)?;
    let (betweenness, centrality) = if labeled.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        centrality(&structure.giants, &labeled, Community::NoVax, cfg.percentile, exec)?
    };
    let ccf = interest
        .map(|b| cross_correlation(&node_count_series(&prepared.graphs), b, cfg.max_lag))
        .transpose()?;
    Ok(PipelineOutput {
        prepared,
        structure,
        scores,
        labelings,
        polarization,
        cores,
        betweenness,
        centrality,
        ccf,
    })
}

impl PipelineOutput {
    pub fn bundle(&self, cfg: &Config) -> Result<ReportBundle> {
        let mut b = ReportBundle {
            config_text: cfg.to_text(),
            master_seed: cfg.seed,
            beta_star: self.scores.iter().map(|s| (s.month, s.beta)).collect(),
            ..ReportBundle::default()
        };
        b.insert("metrics.csv", report::render_metrics(&self.structure.metrics)?);
        b.insert("degree.csv", report::render_degree(&self.structure.degrees)?);
        let leaning: Vec<_> = self.scores.iter().cloned().zip(self.labelings.iter().cloned()).collect();
        b.insert("leaning.csv", report::render_leaning(&leaning)?);
        let heat: Vec<_> = self.scores.iter().map(|s| (s.month, leaning::score_heatmap(s))).collect();
        b.insert("heatmap.csv", report::render_heatmap(&heat)?);
        b.insert("polarization.csv", report::render_polarization(&self.polarization)?);
        b.insert("cores.json", report::render_cores(&self.cores)?);
        if !self.centrality.is_empty() {
            b.insert("centrality.csv", report::render_centrality(&self.centrality)?);
        }
        if let Some(c) = &self.ccf {
            b.insert("ccf.csv", report::render_ccf(c)?);
        }
        Ok(b)
    }
}

/// Rows of `leaning.csv` read back into scores and optional labelings.
pub fn read_leaning_csv(path: &Path) -> Result<Vec<(LeaningScores, Option<CommunityLabeling>)>> {
    #[derive(Deserialize)]
    struct Row {
        month: u32,
        user_id: String,
        count: u32,
        runs: u32,
        beta: f64,
        reference_seed: u64,
        label: Option<String>,
        provenance: Option<String>,
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut months: BTreeMap<u32, (LeaningScores, Vec<(Community, Provenance)>)> = BTreeMap::new();
    for row in r.deserialize() {
        let row: Row = row?;
        let (s, labels) = months.entry(row.month).or_insert_with(|| {
            (
                LeaningScores {
                    month: row.month,
                    users: Vec::new(),
                    counts: Vec::new(),
                    runs: row.runs,
                    reference_seed: row.reference_seed,
                    beta: row.beta,
                },
                Vec::new(),
            )
        });
        s.users.push(row.user_id);
        s.counts.push(row.count);
        if let (Some(l), Some(p)) = (row.label.as_deref(), row.provenance.as_deref()) {
            let p = match p {
                "seed-manual" => Provenance::SeedManual,
                "propagated" => Provenance::Propagated,
                other => return Err(Error::Format(format!("unknown provenance {other:?}"))),
            };
            labels.push((l.parse()?, p));
        }
    }
    Ok(months
        .into_values()
        .map(|(s, labels)| {
            let labeling = (labels.len() == s.len() && !labels.is_empty()).then(|| CommunityLabeling {
                month: s.month,
                users: s.users.clone(),
                labels: labels.iter().map(|x| x.0).collect(),
                provenance: labels.iter().map(|x| x.1).collect(),
            });
            (s, labeling)
        })
        .collect())
}
