//! Cross-correlation of monthly series and assembly of the report bundle.
//!
//! Lag convention: `ccf(l)` pairs `a_t` with `b_{t+l}`, so a negative peak
//! lag means `b` leads `a`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::HighBetweennessRow;
use crate::error::{Error, Result};
use crate::leaning::{CommunityLabeling, LeaningScores};
use crate::metrics::{DegreeHistogram, MetricsRow};
use crate::multiplexity::CoreReport;
use crate::polarization::PolarizationReport;

pub const DEFAULT_MAX_LAG: u32 = 6;

/// Monthly values keyed by month index; `None` marks a missing month.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub values: BTreeMap<u32, Option<f64>>,
}

impl TimeSeries {
    /// Months `1..=values.len()`.
    pub fn from_values(values: &[f64]) -> Self {
        TimeSeries {
            values: values.iter().enumerate().map(|(i, &v)| (i as u32 + 1, Some(v))).collect(),
        }
    }

    pub fn present(&self) -> usize {
        self.values.values().filter(|v| v.is_some()).count()
    }

    fn get(&self, month: i64) -> Option<f64> {
        u32::try_from(month).ok().and_then(|m| self.values.get(&m).copied().flatten())
    }

    /// Copy with every present value replaced by its population z-score.
    fn zscored(&self) -> Result<TimeSeries> {
        let xs: Vec<f64> = self.values.values().flatten().copied().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::UndefinedCorrelation("constant series".into()));
        }
        Ok(TimeSeries {
            values: self.values.iter().map(|(&m, v)| (m, v.map(|x| (x - mean) / sd))).collect(),
        })
    }
}

/// Two-column CSV `month,value`; an empty value is a missing month.
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    #[derive(Deserialize)]
    struct Row {
        month: u32,
        value: Option<f64>,
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut values = BTreeMap::new();
    for row in r.deserialize() {
        let row: Row = row?;
        if values.insert(row.month, row.value).is_some() {
            return Err(Error::Format(format!("{}: month {} repeated", path.display(), row.month)));
        }
    }
    Ok(TimeSeries { values })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcfPoint {
    pub lag: i32,
    /// Undefined when no month pair overlaps at this lag.
    pub ccf: Option<f64>,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCorrelation {
    pub points: Vec<CcfPoint>,
    pub peak_lag: i32,
    pub peak: f64,
}

impl CrossCorrelation {
    pub fn at(&self, lag: i32) -> Option<f64> {
        self.points.iter().find(|p| p.lag == lag).and_then(|p| p.ccf)
    }
}

pub fn cross_correlation(a: &TimeSeries, b: &TimeSeries, max_lag: u32) -> Result<CrossCorrelation> {
    let need = max_lag as usize + 3;
    for (name, s) in [("first", a), ("second", b)] {
        if s.present() < need {
            return Err(Error::Precondition(format!(
                "{name} series has {} values, needs at least {need} for max lag {max_lag}",
                s.present()
            )));
        }
    }
    let (za, zb) = (a.zscored()?, b.zscored()?);
    let max_lag = max_lag as i32;
    let points: Vec<CcfPoint> = (-max_lag..=max_lag)
        .map(|l| {
            let mut sum = 0.0;
            let mut pairs = 0;
            for (&t, x) in &za.values {
                if let (Some(x), Some(y)) = (x, zb.get(i64::from(t) + i64::from(l))) {
                    sum += x * y;
                    pairs += 1;
                }
            }
            CcfPoint {
                lag: l,
                ccf: (pairs > 0).then(|| sum / pairs as f64),
                pairs,
            }
        })
        .collect();
    let mut best: Option<(i32, f64)> = None;
    for p in &points {
        let Some(v) = p.ccf else { continue };
        let better = match best {
            None => true,
            Some((bl, bv)) => v > bv || (v == bv && (p.lag.abs(), p.lag) < (bl.abs(), bl)),
        };
        if better {
            best = Some((p.lag, v));
        }
    }
    let (peak_lag, peak) = best.ok_or_else(|| Error::UndefinedCorrelation("no overlapping months".into()))?;
    Ok(CrossCorrelation { points, peak_lag, peak })
}

/// Names of the bundle tables, in manifest order.
pub const TABLES: [&str; 8] = [
    "metrics.csv",
    "degree.csv",
    "leaning.csv",
    "heatmap.csv",
    "polarization.csv",
    "cores.json",
    "centrality.csv",
    "ccf.csv",
];

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn render_metrics(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    csv_bytes(rows)
}

pub fn render_degree(hists: &[(u32, DegreeHistogram)]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        month: u32,
        degree: usize,
        count: usize,
    }
    csv_bytes(hists.iter().flat_map(|(m, h)| {
        h.counts.iter().map(move |&(degree, count)| Row {
            month: *m,
            degree,
            count,
        })
    }))
}

/// One row per user and month; the label columns are empty for months
/// without a labeling.
pub fn render_leaning(months: &[(LeaningScores, Option<CommunityLabeling>)]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        month: u32,
        user_id: &'a str,
        count: u32,
        runs: u32,
        score: f64,
        confident: bool,
        beta: f64,
        reference_seed: u64,
        label: Option<&'a str>,
        provenance: Option<&'a str>,
    }
    let mut rows = Vec::new();
    for (s, l) in months {
        for v in 0..s.len() {
            rows.push(Row {
                month: s.month,
                user_id: &s.users[v],
                count: s.counts[v],
                runs: s.runs,
                score: s.score(v),
                confident: s.is_confident(v),
                beta: s.beta,
                reference_seed: s.reference_seed,
                label: l.as_ref().map(|l| l.labels[v].as_str()),
                provenance: l.as_ref().map(|l| l.provenance[v].as_str()),
            });
        }
    }
    csv_bytes(rows)
}

pub fn render_heatmap(months: &[(u32, Vec<(f64, f64)>)]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row {
        month: u32,
        score: f64,
        share: f64,
    }
    csv_bytes(
        months
            .iter()
            .flat_map(|(m, bins)| bins.iter().map(move |&(score, share)| Row { month: *m, score, share })),
    )
}

pub fn render_polarization(rows: &[PolarizationReport]) -> Result<Vec<u8>> {
    csv_bytes(rows)
}

pub fn render_cores(report: &CoreReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report)?;
    out.push(b'\n');
    Ok(out)
}

pub fn render_centrality(rows: &[HighBetweennessRow]) -> Result<Vec<u8>> {
    csv_bytes(rows)
}

pub fn render_ccf(c: &CrossCorrelation) -> Result<Vec<u8>> {
    csv_bytes(&c.points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub present: bool,
    pub sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub tables: Vec<TableEntry>,
    pub absent: Vec<String>,
    /// Balance target chosen per month.
    pub beta_star: BTreeMap<u32, f64>,
}

/// Tables and provenance for one report directory.
#[derive(Clone, Debug, Default)]
pub struct ReportBundle {
    pub tables: BTreeMap<String, Vec<u8>>,
    pub config_text: String,
    pub master_seed: u64,
    pub beta_star: BTreeMap<u32, f64>,
}

impl ReportBundle {
    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.tables.insert(name.to_string(), bytes);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write every present table plus `manifest.json` to `dir`. Output bytes
/// depend only on the bundle contents.
pub fn assemble_report(dir: &Path, bundle: &ReportBundle) -> Result<Manifest> {
    if !bundle.tables.contains_key(TABLES[0]) {
        return Err(Error::Precondition("the report needs at least the metrics table".into()));
    }
    if let Some(extra) = bundle.tables.keys().find(|k| !TABLES.contains(&k.as_str())) {
        return Err(Error::Argument(format!("unknown report table {extra}")));
    }
    std::fs::create_dir_all(dir)?;
    let mut tables = Vec::new();
    let mut absent = Vec::new();
    for name in TABLES {
        match bundle.tables.get(name) {
            Some(bytes) => {
                std::fs::write(dir.join(name), bytes)?;
                tables.push(TableEntry {
                    name: name.into(),
                    present: true,
                    sha256: Some(sha256_hex(bytes)),
                });
            }
            None => {
                log::warn!("report table {name} absent");
                absent.push(name.to_string());
                tables.push(TableEntry {
                    name: name.into(),
                    present: false,
                    sha256: None,
                });
            }
        }
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: bundle.master_seed,
        config_sha256: sha256_hex(bundle.config_text.as_bytes()),
        tables,
        absent,
        beta_star: bundle.beta_star.clone(),
    };
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest)
}

/// Load whichever bundle tables exist in `dir`.
pub fn collect_tables(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for name in TABLES {
        let p = dir.join(name);
        if p.is_file() {
            out.insert(name.to_string(), std::fs::read(p)?);
        }
    }
    Ok(out)
}
