//! `vaxnet` command line.
//!
//! Every stage reads its inputs from and writes its outputs to the `--out`
//! work directory, so stages can be run one at a time:
//!
//! ```text
//! out/records.jsonl        filtered records in the date range   (ingest)
//! out/user_meta.csv        follower counts and verification     (ingest)
//! out/graphs/month_XX/     nodes.csv, edges.csv                 (ingest)
//! out/metrics.csv, out/degree.csv                               (metrics)
//! out/leaning.csv, out/heatmap.csv                              (leaning, label)
//! out/polarization.csv                                          (polarize)
//! out/cores.json, out/core_graph/                               (multiplex)
//! out/centrality.csv, out/betweenness.csv                       (centrality)
//! out/ccf.csv                                                   (ccf)
//! out/report/                                                   (report)
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vaxnet::ingest::{self, MonthBucket, TweetRecord};
use vaxnet::leaning::{score_heatmap, Community, CommunityLabeling, LeaningScores};
use vaxnet::multiplexity::{build_restricted_multiplexity_with, threshold_components, write_core_graph};
use vaxnet::partition::{bipartition, edge_cut};
use vaxnet::pipeline;
use vaxnet::report::{self, assemble_report, collect_tables, cross_correlation, read_series_csv, ReportBundle};
use vaxnet::rng::hash64;
use vaxnet::synth::{planted_partition, synthetic_tweets, PlantedSpec, TweetStreamSpec};
use vaxnet::{giant_component, Config, Execution, GiantComponent, Graph};

#[derive(Parser, Debug)]
#[command(name = "vaxnet", version, about = "Monthly retweet-network polarization analysis")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Work directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse archives, filter, bucket by month and build retweet graphs.
    Ingest {
        /// JSONL or CSV archives.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Structural metrics and degree histograms of each giant component.
    Metrics,
    /// One seeded bipartition of a single month.
    Partition {
        #[arg(long)]
        month: u32,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Run index mixed into the seed.
        #[arg(long, default_value_t = 0)]
        run: u32,
    },
    /// Ensemble leaning scores with the balance target tuned per month.
    Leaning,
    /// Label communities from seed users.
    Label {
        /// CSV `month,user_id,label`; without it seeds come from hashtags.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Community densities and the polarization score per month.
    Polarize,
    /// Multiplexity cores across the whole period.
    Multiplex,
    /// Betweenness inside one community and the high-betweenness share.
    Centrality {
        #[arg(long, default_value = "novax")]
        side: Community,
    },
    /// Cross-correlation of a series against an external interest series.
    Ccf {
        /// CSV `month,value`.
        #[arg(long)]
        interest: PathBuf,
        /// CSV `month,value`; defaults to the monthly node count.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Collect the tables into a report directory with a manifest.
    Report {
        /// Defaults to `<out>/report`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Generate synthetic fixtures.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
}

#[derive(Subcommand, Debug)]
enum SynthKind {
    /// Two-block random graph in the ingest nodes/edges schema, plus truth.csv.
    Planted(PlantedArgs),
    /// Two-community tweet archive as JSONL.
    Tweets(TweetArgs),
}

#[derive(Args, Debug)]
struct PlantedArgs {
    #[arg(long, default_value_t = 200)]
    n1: usize,
    #[arg(long, default_value_t = 200)]
    n2: usize,
    #[arg(long, default_value_t = 0.05)]
    p_in: f64,
    #[arg(long, default_value_t = 0.005)]
    p_out: f64,
}

#[derive(Args, Debug)]
struct TweetArgs {
    #[arg(long, default_value_t = 41)]
    months: u32,
    #[arg(long, default_value_t = 60)]
    n1: usize,
    #[arg(long, default_value_t = 60)]
    n2: usize,
    #[arg(long, default_value_t = 0.12)]
    p_in: f64,
    #[arg(long, default_value_t = 0.004)]
    p_out: f64,
    #[arg(long, default_value_t = 0.05)]
    churn: f64,
}

struct Ctx {
    cfg: Config,
    out: PathBuf,
    exec: Execution,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn graphs(&self) -> Result<Vec<Graph>> {
        let dir = self.path("graphs");
        ingest::read_graphs(&dir).with_context(|| format!("reading {} (run `vaxnet ingest` first)", dir.display()))
    }

    fn giants(&self) -> Result<Vec<GiantComponent>> {
        Ok(self.graphs()?.iter().map(giant_component).collect())
    }

    fn buckets(&self) -> Result<Vec<MonthBucket>> {
        let path = self.path("records.jsonl");
        let records = ingest::read_archive(&path).with_context(|| format!("reading {}", path.display()))?.records;
        Ok(ingest::bucket_by_month(records, self.cfg.range_start, self.cfg.range_end)?.buckets)
    }

    fn leaning(&self) -> Result<Vec<(LeaningScores, Option<CommunityLabeling>)>> {
        let path = self.path("leaning.csv");
        pipeline::read_leaning_csv(&path).with_context(|| format!("reading {} (run `vaxnet leaning` first)", path.display()))
    }

    fn labelings(&self) -> Result<Vec<CommunityLabeling>> {
        let labeled: Vec<_> = self.leaning()?.into_iter().filter_map(|(_, l)| l).collect();
        if labeled.is_empty() {
            bail!("no labeled month in leaning.csv (run `vaxnet label` first)");
        }
        Ok(labeled)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => Config::from_path(p).with_context(|| format!("loading config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let exec = match cli.threads {
        Some(0) => bail!("--threads must be positive"),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Ctx { cfg, out: cli.out, exec };
    match cli.command {
        Command::Ingest { inputs } => cmd_ingest(&ctx, &inputs),
        Command::Metrics => cmd_metrics(&ctx),
        Command::Partition { month, beta, run } => cmd_partition(&ctx, month, beta, run),
        Command::Leaning => cmd_leaning(&ctx),
        Command::Label { seeds } => cmd_label(&ctx, seeds.as_deref()),
        Command::Polarize => cmd_polarize(&ctx),
        Command::Multiplex => cmd_multiplex(&ctx),
        Command::Centrality { side } => cmd_centrality(&ctx, side),
        Command::Ccf { interest, series } => cmd_ccf(&ctx, &interest, series.as_deref()),
        Command::Report { dir } => cmd_report(&ctx, dir),
        Command::Synth { kind } => cmd_synth(&ctx, kind),
    }
}

fn cmd_ingest(ctx: &Ctx, inputs: &[PathBuf]) -> Result<()> {
    let mut records: Vec<TweetRecord> = Vec::new();
    for p in inputs {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        let parsed = ingest::parse_archive_with(f, ingest::ArchiveFormat::from_path(p), ctx.cfg.max_malformed)
            .with_context(|| format!("parsing {}", p.display()))?;
        log::info!("{}: {} records", p.display(), parsed.records.len());
        records.extend(parsed.records);
    }
    let prepared = pipeline::prepare(records, &ctx.cfg)?;
    let kept: Vec<TweetRecord> = prepared.buckets.iter().flat_map(|b| b.records.iter().cloned()).collect();
    ingest::write_jsonl(&kept, BufWriter::new(File::create(ctx.path("records.jsonl"))?))?;
    ingest::write_user_meta(&ctx.path("user_meta.csv"), &prepared.meta)?;
    let graphs_dir = ctx.path("graphs");
    if graphs_dir.exists() {
        fs::remove_dir_all(&graphs_dir)?;
    }
    ingest::write_graphs(&graphs_dir, &prepared.graphs)?;
    println!(
        "{} records kept over {} months ({} outside the range)",
        kept.len(),
        prepared.graphs.len(),
        prepared.dropped
    );
    for g in &prepared.graphs {
        println!("month {:2}: {} nodes, {} edges", g.month(), g.n(), g.m());
    }
    Ok(())
}

fn cmd_metrics(ctx: &Ctx) -> Result<()> {
    let t = pipeline::structure(&ctx.graphs()?, ctx.exec);
    ctx.write("metrics.csv", &report::render_metrics(&t.metrics)?)?;
    ctx.write("degree.csv", &report::render_degree(&t.degrees)?)?;
    Ok(())
}

fn cmd_partition(ctx: &Ctx, month: u32, beta: f64, run: u32) -> Result<()> {
    let giants = ctx.giants()?;
    let Some(gc) = giants.iter().find(|g| g.graph.month() == month) else {
        bail!("no graph for month {month}");
    };
    let g = &gc.graph;
    let seed = hash64(ctx.cfg.seed, month, run);
    let p = bipartition(g, beta, ctx.cfg.epsilon, seed)?;
    let name = format!("partition_month_{month:02}.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "side"])?;
    for (u, s) in g.node_ids().iter().zip(&p.side) {
        w.write_record([u.as_str(), &s.to_string()])?;
    }
    ctx.write(&name, &w.into_inner()?)?;
    let ones = p.side.iter().filter(|&&s| s == 1).count();
    println!("month {month}: cut {} sides {}/{} seed {seed}", edge_cut(g, &p.side), g.n() - ones, ones);
    Ok(())
}

fn cmd_leaning(ctx: &Ctx) -> Result<()> {
    let scores = pipeline::leaning_scores(&ctx.giants()?, &ctx.cfg, ctx.exec)?;
    write_leaning(ctx, scores.into_iter().map(|s| (s, None)).collect())
}

fn write_leaning(ctx: &Ctx, months: Vec<(LeaningScores, Option<CommunityLabeling>)>) -> Result<()> {
    ctx.write("leaning.csv", &report::render_leaning(&months)?)?;
    let heat: Vec<_> = months.iter().map(|(s, _)| (s.month, score_heatmap(s))).collect();
    ctx.write("heatmap.csv", &report::render_heatmap(&heat)?)
}

fn cmd_label(ctx: &Ctx, seeds: Option<&Path>) -> Result<()> {
    let scores: Vec<LeaningScores> = ctx.leaning()?.into_iter().map(|(s, _)| s).collect();
    let seeds = seeds
        .map(|p| pipeline::read_seed_labels(p).with_context(|| format!("reading seeds {}", p.display())))
        .transpose()?;
    let buckets = if seeds.is_none() { ctx.buckets()? } else { Vec::new() };
    let labelings = pipeline::label_months(&scores, seeds.as_ref(), &buckets, &ctx.cfg)?;
    for l in labelings.iter().flatten() {
        println!(
            "month {:2}: {} novax, {} provax",
            l.month,
            l.count(Community::NoVax),
            l.count(Community::ProVax)
        );
    }
    write_leaning(ctx, scores.into_iter().zip(labelings).collect())
}

fn cmd_polarize(ctx: &Ctx) -> Result<()> {
    let rows = pipeline::polarization_rows(&ctx.giants()?, &ctx.labelings()?, &ctx.buckets()?)?;
    ctx.write("polarization.csv", &report::render_polarization(&rows)?)
}

fn cmd_multiplex(ctx: &Ctx) -> Result<()> {
    let months = ctx.graphs()?.len() as u32;
    let labeled = ctx.labelings()?;
    let meta_path = ctx.path("user_meta.csv");
    let meta = if meta_path.is_file() { ingest::read_user_meta(&meta_path)? } else { BTreeMap::new() };
    let cores = pipeline::cores(&labeled, months, &ctx.cfg, &meta, ctx.exec)?;
    ctx.write("cores.json", &report::render_cores(&cores)?)?;
    for t in &cores.thresholds {
        println!("k = {}: {} components", t.threshold, t.components.len());
    }
    // core graph at the strictest threshold that fits the period
    if let Some(k) = ctx.cfg.thresholds.iter().copied().filter(|&k| k <= months).max() {
        let full = pipeline::full_period(&labeled, months);
        let m = build_restricted_multiplexity_with(&full, k, ctx.exec)?;
        let comps = threshold_components(&m, k, &meta)?;
        write_core_graph(&ctx.path("core_graph"), &m, &comps)?;
    }
    Ok(())
}

fn cmd_centrality(ctx: &Ctx, side: Community) -> Result<()> {
    let (months, rows) =
        pipeline::centrality(&ctx.giants()?, &ctx.labelings()?, side, ctx.cfg.percentile, ctx.exec)?;
    ctx.write("centrality.csv", &report::render_centrality(&rows)?)?;
    let mut values = Vec::new();
    vaxnet::centrality::write_values_csv(&months, &mut values)?;
    ctx.write("betweenness.csv", &values)
}

fn cmd_ccf(ctx: &Ctx, interest: &Path, series: Option<&Path>) -> Result<()> {
    let b = read_series_csv(interest).with_context(|| format!("reading {}", interest.display()))?;
    let a = match series {
        Some(p) => read_series_csv(p).with_context(|| format!("reading {}", p.display()))?,
        None => pipeline::node_count_series(&ctx.graphs()?),
    };
    let c = cross_correlation(&a, &b, ctx.cfg.max_lag)?;
    ctx.write("ccf.csv", &report::render_ccf(&c)?)?;
    println!("peak lag {} ccf {:.4}", c.peak_lag, c.peak);
    Ok(())
}

fn cmd_report(ctx: &Ctx, dir: Option<PathBuf>) -> Result<()> {
    let dir = dir.unwrap_or_else(|| ctx.path("report"));
    let beta_star = match ctx.leaning() {
        Ok(months) => months.iter().map(|(s, _)| (s.month, s.beta)).collect(),
        Err(_) => BTreeMap::new(),
    };
    let bundle = ReportBundle {
        tables: collect_tables(&ctx.out)?,
        config_text: ctx.cfg.to_text(),
        master_seed: ctx.cfg.seed,
        beta_star,
    };
    let manifest = assemble_report(&dir, &bundle)?;
    println!(
        "{}: {} tables present, {} absent",
        dir.display(),
        manifest.tables.len() - manifest.absent.len(),
        manifest.absent.len()
    );
    Ok(())
}

fn cmd_synth(ctx: &Ctx, kind: SynthKind) -> Result<()> {
    let dir = ctx.path("synth");
    fs::create_dir_all(&dir)?;
    match kind {
        SynthKind::Planted(a) => {
            let p = planted_partition(&PlantedSpec {
                sizes: (a.n1, a.n2),
                p_in: a.p_in,
                p_out: a.p_out,
                seed: ctx.cfg.seed,
            })?;
            ingest::write_graph(&dir, &p.graph)?;
            let mut w = csv::Writer::from_path(dir.join("truth.csv"))?;
            w.write_record(["user_id", "block"])?;
            for (u, b) in p.graph.node_ids().iter().zip(&p.truth) {
                w.write_record([u.as_str(), &b.to_string()])?;
            }
            w.flush()?;
            println!("{}: {} nodes, {} edges", dir.display(), p.graph.n(), p.graph.m());
        }
        SynthKind::Tweets(a) => {
            let records = synthetic_tweets(&TweetStreamSpec {
                range_start: ctx.cfg.range_start,
                months: a.months,
                sizes: (a.n1, a.n2),
                p_in: a.p_in,
                p_out: a.p_out,
                churn: a.churn,
                seed: ctx.cfg.seed,
            })?;
            let path = dir.join("tweets.jsonl");
            ingest::write_jsonl(&records, BufWriter::new(File::create(&path)?))?;
            println!("{}: {} records", path.display(), records.len());
        }
    }
    Ok(())
}
