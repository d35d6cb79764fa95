//! Flat `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Every key is optional:
//!
//! | key | default |
//! |---|---|
//! | `range_start` | `2019-01-01` (first month, inclusive) |
//! | `range_end` | `2022-06-01` (first month after the range) |
//! | `keywords` | the 20 built-in vaccine keywords |
//! | `lang` | `it` |
//! | `max_malformed` | `0.01` |
//! | `beta_grid` | `0.05, 0.10, ..., 0.50` |
//! | `runs` | `100` |
//! | `epsilon` | `0.05` |
//! | `extreme_fraction` | `0.10` |
//! | `thresholds` | `41, 40, 39` |
//! | `percentile` | `0.95` |
//! | `max_lag` | `6` |
//! | `pro_tags`, `anti_tags` | built-in hashtag lists |
//! | `seed` | `0` (master seed) |

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::ingest::{default_keywords, DEFAULT_LANG, DEFAULT_MAX_MALFORMED};
use crate::leaning::{default_beta_grid, DEFAULT_ANTI_TAGS, DEFAULT_EXTREME_FRACTION, DEFAULT_PRO_TAGS, DEFAULT_RUNS};
use crate::partition::DEFAULT_EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub range_start: NaiveDate,
    pub range_end: NaiveDate,
    pub keywords: Vec<String>,
    pub lang: String,
    pub max_malformed: f64,
    pub beta_grid: Vec<f64>,
    pub runs: u32,
    pub epsilon: f64,
    pub extreme_fraction: f64,
    pub thresholds: Vec<u32>,
    pub percentile: f64,
    pub max_lag: u32,
    pub pro_tags: Vec<String>,
    pub anti_tags: Vec<String>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            range_start: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            range_end: NaiveDate::from_ymd_opt(2022, 6, 1).unwrap(),
            keywords: default_keywords(),
            lang: DEFAULT_LANG.into(),
            max_malformed: DEFAULT_MAX_MALFORMED,
            beta_grid: default_beta_grid(),
            runs: DEFAULT_RUNS,
            epsilon: DEFAULT_EPSILON,
            extreme_fraction: DEFAULT_EXTREME_FRACTION,
            thresholds: vec![41, 40, 39],
            percentile: crate::centrality::DEFAULT_PERCENTILE,
            max_lag: crate::report::DEFAULT_MAX_LAG,
            pro_tags: DEFAULT_PRO_TAGS.iter().map(|s| s.to_string()).collect(),
            anti_tags: DEFAULT_ANTI_TAGS.iter().map(|s| s.to_string()).collect(),
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl Config {
    pub fn parse_str(text: &str) -> Result<Config> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "range_start" => c.range_start = parse(k, v)?,
                "range_end" => c.range_end = parse(k, v)?,
                "keywords" => c.keywords = list(k, v)?,
                "lang" => c.lang = v.to_string(),
                "max_malformed" => c.max_malformed = parse(k, v)?,
                "beta_grid" => c.beta_grid = list(k, v)?,
                "runs" => c.runs = parse(k, v)?,
                "epsilon" => c.epsilon = parse(k, v)?,
                "extreme_fraction" => c.extreme_fraction = parse(k, v)?,
                "thresholds" => c.thresholds = list(k, v)?,
                "percentile" => c.percentile = parse(k, v)?,
                "max_lag" => c.max_lag = parse(k, v)?,
                "pro_tags" => c.pro_tags = list(k, v)?,
                "anti_tags" => c.anti_tags = list(k, v)?,
                "seed" => c.seed = parse(k, v)?,
                _ => return Err(Error::Config(format!("line {}: unknown key {k:?}", i + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        Config::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.range_start >= self.range_end {
            return bad("range_start must precede range_end".into());
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|&b| !(b > 0.0 && b <= 0.5)) {
            return bad(format!("beta_grid values must lie in (0, 0.5]: {:?}", self.beta_grid));
        }
        if self.runs == 0 {
            return bad("runs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1)", self.epsilon));
        }
        if !(self.extreme_fraction > 0.0 && self.extreme_fraction <= 1.0) {
            return bad(format!("extreme_fraction {} outside (0, 1]", self.extreme_fraction));
        }
        if !(0.0..=1.0).contains(&self.percentile) {
            return bad(format!("percentile {} outside [0, 1]", self.percentile));
        }
        if !(0.0..=1.0).contains(&self.max_malformed) {
            return bad(format!("max_malformed {} outside [0, 1]", self.max_malformed));
        }
        if self.thresholds.contains(&0) {
            return bad("thresholds must be positive".into());
        }
        Ok(())
    }

    /// Canonical text listing every key; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("range_start", self.range_start.to_string());
        kv("range_end", self.range_end.to_string());
        kv("keywords", join(&self.keywords));
        kv("lang", self.lang.clone());
        kv("max_malformed", self.max_malformed.to_string());
        kv("beta_grid", join(&self.beta_grid));
        kv("runs", self.runs.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("extreme_fraction", self.extreme_fraction.to_string());
        kv("thresholds", join(&self.thresholds));
        kv("percentile", self.percentile.to_string());
        kv("max_lag", self.max_lag.to_string());
        kv("pro_tags", join(&self.pro_tags));
        kv("anti_tags", join(&self.anti_tags));
        kv("seed", self.seed.to_string());
        s
    }
}
