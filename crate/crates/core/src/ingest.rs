//! Tweet archive parsing, keyword/language filtering, monthly bucketing and
//! mutual-retweet graph construction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Keywords used to collect the Italian vaccination debate.
pub const DEFAULT_KEYWORDS: [&str; 20] = [
    "vaccino",
    "vaccini",
    "vaccinazione",
    "vaccinazioni",
    "vaccinare",
    "vaccinarsi",
    "vaccinatevi",
    "vacciniamoci",
    "vaccinando",
    "vaccinale",
    "vaccinali",
    "vaccinati",
    "vaccinate",
    "vaccinata",
    "vaccinato",
    "va@@ino",
    "va..ino",
    "vaxino",
    "vaxxino",
    "#iomiovaccino",
];

pub const DEFAULT_LANG: &str = "it";

/// Share of malformed lines above which parsing fails.
pub const DEFAULT_MAX_MALFORMED: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    #[serde(rename = "id")]
    pub tweet_id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub lang: String,
    #[serde(default)]
    pub retweet_of_author_id: Option<String>,
    pub author_verified: bool,
    pub author_followers: u64,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweet_of_author_id.is_some()
    }

    fn validate(&self) -> bool {
        !self.tweet_id.is_empty()
            && !self.author_id.is_empty()
            && self.retweet_of_author_id.as_deref().map_or(true, |r| !r.is_empty())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchiveFormat {
    Jsonl,
    Csv,
}

impl FromStr for ArchiveFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Ok(ArchiveFormat::Jsonl),
            "csv" => Ok(ArchiveFormat::Csv),
            other => Err(Error::Argument(format!("unknown archive format {other:?}"))),
        }
    }
}

impl ArchiveFormat {
    /// Guess from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ArchiveFormat::Csv,
            _ => ArchiveFormat::Jsonl,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParsedArchive {
    pub records: Vec<TweetRecord>,
    /// 1-based line numbers of rejected lines.
    pub malformed_lines: Vec<usize>,
    /// Non-blank data lines seen.
    pub total_lines: usize,
}

/// Parse an archive, failing when more than 1% of its lines are malformed.
pub fn parse_archive<R: Read>(source: R, format: ArchiveFormat) -> Result<ParsedArchive> {
    parse_archive_with(source, format, DEFAULT_MAX_MALFORMED)
}

/// Parse an archive with an explicit malformed-line tolerance in `[0, 1]`.
///
/// Lines that fail to decode, lack an identifier, or repeat an earlier tweet
/// id are skipped and reported.
pub fn parse_archive_with<R: Read>(
    source: R,
    format: ArchiveFormat,
    max_malformed_ratio: f64,
) -> Result<ParsedArchive> {
    let mut out = ParsedArchive::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut accept = |out: &mut ParsedArchive, line: usize, rec: Option<TweetRecord>| {
        out.total_lines += 1;
        match rec {
            Some(r) if r.validate() && seen.insert(r.tweet_id.clone()) => out.records.push(r),
            _ => out.malformed_lines.push(line),
        }
    };
    match format {
        ArchiveFormat::Jsonl => {
            let reader = BufReader::new(source);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec = serde_json::from_str::<TweetRecord>(&line).ok();
                accept(&mut out, i + 1, rec);
            }
        }
        ArchiveFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
            let headers = reader.headers()?.clone();
            let mut row = csv::StringRecord::new();
            loop {
                match reader.read_record(&mut row) {
                    Ok(true) => {}
                    Ok(false) => break,
                    Err(e) if e.is_io_error() => return Err(e.into()),
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        accept(&mut out, line, None);
                        continue;
                    }
                }
                let line = row.position().map_or(0, |p| p.line() as usize);
                let rec = row.deserialize::<TweetRecord>(Some(&headers)).ok();
                accept(&mut out, line, rec);
            }
        }
    }
    let bad = out.malformed_lines.len();
    if bad > 0 {
        log::warn!("{bad} of {} lines malformed", out.total_lines);
    }
    if out.total_lines > 0 && bad as f64 > max_malformed_ratio * out.total_lines as f64 {
        return Err(Error::Schema {
            malformed: bad,
            total: out.total_lines,
            first_lines: out.malformed_lines.iter().take(5).copied().collect(),
        });
    }
    Ok(out)
}

pub fn read_archive(path: &Path) -> Result<ParsedArchive> {
    parse_archive(File::open(path)?, ArchiveFormat::from_path(path))
}

pub fn write_jsonl<W: Write>(records: &[TweetRecord], sink: W) -> Result<()> {
    let mut w = BufWriter::new(sink);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(records: &[TweetRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Keep records in `lang` whose text contains at least one keyword
/// (case-insensitive substring match).
pub fn filter_records(records: Vec<TweetRecord>, keywords: &[String], lang: &str) -> Vec<TweetRecord> {
    let needles: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
    records
        .into_iter()
        .filter(|r| r.lang == lang)
        .filter(|r| {
            let text = r.text.to_lowercase();
            needles.iter().any(|k| text.contains(k.as_str()))
        })
        .collect()
}

pub fn default_keywords() -> Vec<String> {
    DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonthBucket {
    /// 1-based month index within the configured range.
    pub month_index: u32,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub records: Vec<TweetRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bucketing {
    pub buckets: Vec<MonthBucket>,
    /// Records outside the range.
    pub dropped: usize,
}

fn month_start(year: i32, month: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, month, 1, 0, 0, 0).single().expect("valid first-of-month")
}

/// Number of calendar months in `[start, end)`; both must be first-of-month.
pub fn month_count(start: NaiveDate, end: NaiveDate) -> Result<u32> {
    if start.day() != 1 || end.day() != 1 {
        return Err(Error::Argument(format!("range bounds must be first-of-month dates, got {start} and {end}")));
    }
    if start >= end {
        return Err(Error::Argument(format!("inverted or empty range {start}..{end}")));
    }
    let months = (end.year() - start.year()) * 12 + end.month() as i32 - start.month() as i32;
    Ok(months as u32)
}

/// Split records into calendar months over `[range_start, range_end)`, UTC.
pub fn bucket_by_month(records: Vec<TweetRecord>, range_start: NaiveDate, range_end: NaiveDate) -> Result<Bucketing> {
    let count = month_count(range_start, range_end)?;
    let mut buckets: Vec<MonthBucket> = (0..count)
        .map(|i| {
            let m0 = range_start.month0() + i;
            let (y, m) = (range_start.year() + (m0 / 12) as i32, m0 % 12 + 1);
            let m1 = m0 + 1;
            let (ey, em) = (range_start.year() + (m1 / 12) as i32, m1 % 12 + 1);
            MonthBucket {
                month_index: i + 1,
                start: month_start(y, m),
                end: month_start(ey, em),
                records: Vec::new(),
            }
        })
        .collect();
    let first = buckets[0].start;
    let last = buckets[buckets.len() - 1].end;
    let mut dropped = 0;
    for r in records {
        if r.created_at < first || r.created_at >= last {
            dropped += 1;
            continue;
        }
        let t = r.created_at;
        let idx = (t.year() - first.year()) * 12 + t.month() as i32 - first.month() as i32;
        buckets[idx as usize].records.push(r);
    }
    Ok(Bucketing { buckets, dropped })
}

/// Undirected mutual-retweet graph of one month. Nodes are ordered by user
/// id; edge weight is the retweet count in both directions.
pub fn build_retweet_graph(bucket: &MonthBucket) -> Graph {
    let mut ties: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for r in &bucket.records {
        let Some(target) = r.retweet_of_author_id.as_deref() else {
            continue;
        };
        let a = r.author_id.as_str();
        if a == target {
            continue;
        }
        let key = if a < target { (a, target) } else { (target, a) };
        *ties.entry(key).or_insert(0) += 1;
    }
    let mut users: Vec<&str> = ties.keys().flat_map(|&(a, b)| [a, b]).collect();
    users.sort_unstable();
    users.dedup();
    let index: HashMap<&str, u32> = users.iter().enumerate().map(|(i, &u)| (u, i as u32)).collect();
    let node_ids = users.iter().map(|u| u.to_string()).collect();
    Graph::from_edges(
        bucket.month_index,
        node_ids,
        ties.iter().map(|(&(a, b), &w)| (index[a], index[b], w)),
    )
    .expect("retweet ties are valid edges")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserMeta {
    pub user_id: String,
    pub verified: bool,
    /// Maximum follower count observed.
    pub followers: u64,
    #[serde(default)]
    pub handle: Option<String>,
}

/// Per-author metadata; conflicting observations resolve to the maximum
/// follower count and to verified if ever verified.
pub fn collect_user_meta<'a, I>(records: I) -> BTreeMap<String, UserMeta>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut out: BTreeMap<String, UserMeta> = BTreeMap::new();
    for r in records {
        let e = out.entry(r.author_id.clone()).or_insert_with(|| UserMeta {
            user_id: r.author_id.clone(),
            verified: false,
            followers: 0,
            handle: None,
        });
        e.verified |= r.author_verified;
        e.followers = e.followers.max(r.author_followers);
    }
    out
}

pub fn write_user_meta(path: &Path, meta: &BTreeMap<String, UserMeta>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for m in meta.values() {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_user_meta(path: &Path) -> Result<BTreeMap<String, UserMeta>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in r.deserialize() {
        let m: UserMeta = row?;
        out.insert(m.user_id.clone(), m);
    }
    Ok(out)
}

pub fn month_dir(root: &Path, month: u32) -> PathBuf {
    root.join(format!("month_{month:02}"))
}

/// Write `nodes.csv` and `edges.csv` into `dir`.
pub fn write_graph(dir: &Path, g: &Graph) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    nodes.write_record(["node_index", "user_id"])?;
    for (i, u) in g.node_ids().iter().enumerate() {
        nodes.write_record([i.to_string().as_str(), u.as_str()])?;
    }
    nodes.flush()?;
    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(["u_index", "v_index", "weight"])?;
    for (u, v, w) in g.edges() {
        edges.write_record([u.to_string(), v.to_string(), w.to_string()])?;
    }
    edges.flush()?;
    Ok(())
}

/// Read a graph written by [`write_graph`].
pub fn read_graph(dir: &Path, month: u32) -> Result<Graph> {
    let mut nodes = csv::Reader::from_path(dir.join("nodes.csv"))?;
    let mut node_ids = Vec::new();
    for (expect, row) in nodes.records().enumerate() {
        let row = row?;
        let idx: usize = row.get(0).unwrap_or("").parse().map_err(|_| bad_field(dir, "node_index"))?;
        if idx != expect {
            return Err(Error::Format(format!("{}: node indices must be dense and ordered", dir.display())));
        }
        node_ids.push(row.get(1).ok_or_else(|| bad_field(dir, "user_id"))?.to_string());
    }
    let mut edges = csv::Reader::from_path(dir.join("edges.csv"))?;
    let mut list = Vec::new();
    for row in edges.records() {
        let row = row?;
        let field = |i: usize, name: &str| -> Result<u64> {
            row.get(i).unwrap_or("").parse().map_err(|_| bad_field(dir, name))
        };
        list.push((field(0, "u_index")? as u32, field(1, "v_index")? as u32, field(2, "weight")?));
    }
    Graph::from_edges(month, node_ids, list)
}

fn bad_field(dir: &Path, name: &str) -> Error {
    Error::Format(format!("{}: bad or missing {name}", dir.display()))
}

/// Write every graph into `root/month_XX/`.
pub fn write_graphs(root: &Path, graphs: &[Graph]) -> Result<()> {
    for g in graphs {
        write_graph(&month_dir(root, g.month()), g)?;
    }
    Ok(())
}

/// Read every `month_XX` directory under `root`, in month order.
pub fn read_graphs(root: &Path) -> Result<Vec<Graph>> {
    let mut months: Vec<(u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(rest) = name.to_str().and_then(|s| s.strip_prefix("month_")) else {
            continue;
        };
        if let Ok(m) = rest.parse::<u32>() {
            months.push((m, entry.path()));
        }
    }
    months.sort();
    months.into_iter().map(|(m, p)| read_graph(&p, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(id: &str, author: &str, at: &str, text: &str, rt: Option<&str>) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            author_id: author.into(),
            created_at: at.parse().unwrap(),
            text: text.into(),
            lang: "it".into(),
            retweet_of_author_id: rt.map(String::from),
            author_verified: false,
            author_followers: 10,
        }
    }

    fn bucket(records: Vec<TweetRecord>) -> MonthBucket {
        MonthBucket {
            month_index: 1,
            start: month_start(2019, 1),
            end: month_start(2019, 2),
            records,
        }
    }

    const T: &str = "2019-01-10T12:00:00Z";

    #[test]
    fn parses_valid_jsonl() {
        let src = r#"{"id":"1","author_id":"a","created_at":"2019-01-01T00:00:00Z","text":"vaccino","lang":"it","retweet_of_author_id":null,"author_verified":false,"author_followers":3}
{"id":"2","author_id":"b","created_at":"2019-01-02T00:00:00Z","text":"vaccini","lang":"it","retweet_of_author_id":"a","author_verified":true,"author_followers":0}
{"id":"3","author_id":"c","created_at":"2019-01-03T10:11:12Z","text":"x","lang":"en","retweet_of_author_id":null,"author_verified":false,"author_followers":9}
"#;
        let p = parse_archive(src.as_bytes(), ArchiveFormat::Jsonl).unwrap();
        assert_eq!(p.records.len(), 3);
        assert!(p.malformed_lines.is_empty());
        assert_eq!(p.records[1].retweet_of_author_id.as_deref(), Some("a"));
    }

    #[test]
    fn malformed_line_is_reported() {
        let src = r#"{"id":"1","author_id":"a","created_at":"2019-01-01T00:00:00Z","text":"t","lang":"it","retweet_of_author_id":null,"author_verified":false,"author_followers":3}
{"id":"2","created_at":"2019-01-01T00:00:00Z","text":"t","lang":"it","retweet_of_author_id":null,"author_verified":false,"author_followers":3}
"#;
        let p = parse_archive_with(src.as_bytes(), ArchiveFormat::Jsonl, 1.0).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.malformed_lines, vec![2]);
        // under the default 1% tolerance the same input is rejected
        match parse_archive(src.as_bytes(), ArchiveFormat::Jsonl) {
            Err(Error::Schema { malformed, first_lines, .. }) => {
                assert_eq!(malformed, 1);
                assert_eq!(first_lines, vec![2]);
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_error_lists_first_five_lines() {
        let mut src = String::new();
        for _ in 0..8 {
            src.push_str("not json\n");
        }
        match parse_archive(src.as_bytes(), ArchiveFormat::Jsonl) {
            Err(Error::Schema { first_lines, malformed, .. }) => {
                assert_eq!(malformed, 8);
                assert_eq!(first_lines, vec![1, 2, 3, 4, 5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_malformed() {
        let r = rec("1", "a", T, "t", None);
        let mut buf = Vec::new();
        write_jsonl(&[r.clone(), r], &mut buf).unwrap();
        let p = parse_archive_with(buf.as_slice(), ArchiveFormat::Jsonl, 1.0).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.malformed_lines, vec![2]);
    }

    #[test]
    fn filter_examples() {
        let kw = default_keywords();
        let mut en = rec("2", "a", T, "vaccine works", None);
        en.lang = "en".into();
        let records = vec![
            rec("1", "a", T, "Il vaccino funziona", None),
            en,
            rec("3", "a", T, "VACCINATEVI tutti", None),
            rec("4", "a", T, "buongiorno", None),
            rec("5", "a", T, "Sostengo #IoMioVaccino", None),
        ];
        let kept: Vec<String> = filter_records(records, &kw, "it").into_iter().map(|r| r.tweet_id).collect();
        assert_eq!(kept, vec!["1", "3", "5"]);
    }

    #[test]
    fn bucketing_examples() {
        let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2019, 4, 1).unwrap();
        let records = vec![
            rec("1", "a", "2019-01-15T00:00:00Z", "", None),
            rec("2", "a", "2019-02-01T00:00:00Z", "", None),
            rec("3", "a", "2019-01-31T23:59:59Z", "", None),
            rec("4", "a", "2019-04-01T00:00:00Z", "", None),
            rec("5", "a", "2018-12-31T23:59:59Z", "", None),
        ];
        let b = bucket_by_month(records, start, end).unwrap();
        assert_eq!(b.buckets.len(), 3);
        let ids = |i: usize| b.buckets[i].records.iter().map(|r| r.tweet_id.as_str()).collect::<Vec<_>>();
        assert_eq!(ids(0), vec!["1", "3"]);
        assert_eq!(ids(1), vec!["2"]);
        assert!(ids(2).is_empty());
        assert_eq!(b.dropped, 2);
        assert_eq!(b.buckets[2].end, month_start(2019, 4));
    }

    #[test]
    fn full_range_has_41_months() {
        let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2022, 6, 1).unwrap();
        let b = bucket_by_month(Vec::new(), start, end).unwrap();
        assert_eq!(b.buckets.len(), 41);
        assert_eq!(b.buckets[40].start, month_start(2022, 5));
        for w in b.buckets.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn inverted_range_is_rejected() {
        let a = NaiveDate::from_ymd_opt(2019, 3, 1).unwrap();
        let b = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        assert!(matches!(bucket_by_month(Vec::new(), a, b), Err(Error::Argument(_))));
        let mid = NaiveDate::from_ymd_opt(2019, 1, 15).unwrap();
        assert!(matches!(bucket_by_month(Vec::new(), b, mid), Err(Error::Argument(_))));
    }

    #[test]
    fn graph_weight_sums_both_directions() {
        let b = bucket(vec![
            rec("1", "A", T, "", Some("B")),
            rec("2", "A", T, "", Some("B")),
            rec("3", "B", T, "", Some("A")),
        ]);
        let g = build_retweet_graph(&b);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 3)]);
    }

    #[test]
    fn self_retweets_and_originals_add_nothing() {
        let b = bucket(vec![rec("1", "A", T, "", Some("A")), rec("2", "C", T, "", None)]);
        let g = build_retweet_graph(&b);
        assert!(g.is_empty());
        assert!(build_retweet_graph(&bucket(Vec::new())).is_empty());
    }

    #[test]
    fn two_retweeters_form_a_path() {
        let b = bucket(vec![rec("1", "A", T, "", Some("B")), rec("2", "C", T, "", Some("B"))]);
        let g = build_retweet_graph(&b);
        assert_eq!(g.node_ids(), &["A", "B", "C"]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1), (1, 2, 1)]);
    }

    #[test]
    fn user_meta_takes_maximum() {
        let mut a = rec("1", "A", T, "", None);
        a.author_followers = 50;
        let mut b = rec("2", "A", T, "", None);
        b.author_followers = 20;
        b.author_verified = true;
        let meta = collect_user_meta([&a, &b]);
        assert_eq!(meta["A"].followers, 50);
        assert!(meta["A"].verified);
    }
}
