//! End-to-end runs: load inputs, build diffusion graphs, run the selected
//! analyses and emit CSV tables with a provenance header.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cascade::{self, CascadeLoadReport, DiffusionGraph, LinkType, PostRecord, RepostRecord};
use crate::community::{self, IntraRatios, Partition};
use crate::error::{Error, Result};
use crate::graph::{FollowNetwork, LoadReport, Node};
use crate::homophily::{self, CorrelationRow};
use crate::io::{self, fmt_f64, fmt_opt, Table};
use crate::metrics::{self, Populations, UserCounts};
use crate::nullmodel::{self, BootstrapResult};
use crate::rci::{self, RciRegression, RciTable};
use crate::stats::{Histogram, PValueMethod};
use crate::summary::{self, CascadeSizeMode, DatasetSummary, DiameterMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Ingest,
    Summary,
    Classify,
    Distance,
    Rci,
    Regress,
    Community,
    Nullmodel,
    Metrics,
    Homophily,
}

impl Analysis {
    pub const ALL: [Analysis; 10] = [
        Analysis::Ingest,
        Analysis::Summary,
        Analysis::Classify,
        Analysis::Distance,
        Analysis::Rci,
        Analysis::Regress,
        Analysis::Community,
        Analysis::Nullmodel,
        Analysis::Metrics,
        Analysis::Homophily,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Ingest => "ingest",
            Analysis::Summary => "summary",
            Analysis::Classify => "classify",
            Analysis::Distance => "distance",
            Analysis::Rci => "rci",
            Analysis::Regress => "regress",
            Analysis::Community => "community",
            Analysis::Nullmodel => "nullmodel",
            Analysis::Metrics => "metrics",
            Analysis::Homophily => "homophily",
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown analysis `{s}`")))
    }
}

/// Parses a comma-separated analysis list; `all` selects everything.
pub fn parse_analyses(list: &str) -> Result<BTreeSet<Analysis>> {
    let mut out = BTreeSet::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Analysis::ALL);
        } else {
            out.insert(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no analyses selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeInput {
    /// Separate post and repost tables.
    Tables { posts: PathBuf, reposts: PathBuf },
    /// SNAP-style activity log filtered on one interaction tag.
    Activity { log: PathBuf, tag: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub dataset: String,
    pub edges: PathBuf,
    pub cascades: CascadeInput,
    pub swap_columns: bool,
    pub seed: u64,
    /// Worker threads; `None` uses the rayon default.
    #[serde(skip)]
    pub workers: Option<usize>,
    pub min_events: u32,
    pub require_mutual: bool,
    pub resolution: f64,
    pub n_null: u32,
    pub n_boot: u32,
    pub max_distance: u32,
    pub cascade_size_mode: CascadeSizeMode,
    /// Overrides the node-count rule for the diameter.
    pub diameter_mode: Option<DiameterMode>,
    pub p_value: PValueMethod,
    pub partition: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub analyses: BTreeSet<Analysis>,
}

impl RunConfig {
    pub fn new(edges: PathBuf, cascades: CascadeInput, out_dir: PathBuf) -> Self {
        RunConfig {
            dataset: "dataset".into(),
            edges,
            cascades,
            swap_columns: false,
            seed: 1,
            workers: None,
            min_events: 5,
            require_mutual: true,
            resolution: 1.0,
            n_null: 10,
            n_boot: 1000,
            max_distance: 4,
            cascade_size_mode: CascadeSizeMode::default(),
            diameter_mode: None,
            p_value: PValueMethod::TApprox,
            partition: None,
            out_dir,
            analyses: Analysis::ALL.into_iter().collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config("resolution must be positive".into()));
        }
        if self.n_null == 0 || self.n_boot == 0 {
            return Err(Error::Config("n-null and n-boot must be positive".into()));
        }
        if self.max_distance == 0 {
            return Err(Error::Config("max distance must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        if self.analyses.is_empty() {
            return Err(Error::Config("no analyses selected".into()));
        }
        Ok(())
    }

    /// Hex digest over every setting that can change results. Worker
    /// count and output directory are excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

/// Loaded and interned inputs.
pub struct Inputs {
    pub network: FollowNetwork,
    pub edge_report: LoadReport,
    pub posts: Vec<PostRecord>,
    pub reposts: Vec<RepostRecord>,
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let (network, edge_report) = io::read_edge_file(&config.edges, config.swap_columns)?;
    info!(
        "network: {} users, {} follow links ({} records dropped)",
        network.node_count(),
        network.edge_count(),
        edge_report.dropped()
    );
    let (posts, reposts) = match &config.cascades {
        CascadeInput::Tables { posts, reposts } => {
            (io::read_posts_file(posts)?, io::read_reposts_file(reposts)?)
        }
        CascadeInput::Activity { log, tag } => io::read_activity_file(log, tag)?,
    };
    Ok(Inputs {
        network,
        edge_report,
        posts,
        reposts,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Header<'a> {
    table: &'a str,
    rows: usize,
    dataset: &'a str,
    config_hash: &'a str,
    seed: u64,
    min_events: u32,
    require_mutual: bool,
    resolution: f64,
    n_null: u32,
    n_boot: u32,
    max_distance: u32,
    cascade_size_mode: CascadeSizeMode,
    version: &'static str,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config_hash: String,
    pub summary: Option<DatasetSummary>,
    pub regression: Option<RciRegression>,
    pub partition: Option<Partition>,
    pub observed_ratios: Option<IntraRatios>,
    pub bootstrap: Option<BootstrapResult>,
    pub funnel: Option<metrics::Funnel>,
    pub correlations: Vec<CorrelationRow>,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Loads inputs and runs the configured analyses on a pool of
/// `config.workers` threads.
pub fn run_pipeline(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    with_workers(config.workers, || {
        let inputs = load_inputs(config)?;
        analyze(config, inputs)
    })
}

pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

struct Context<'a> {
    config: &'a RunConfig,
    network: FollowNetwork,
    graphs: Vec<DiffusionGraph>,
    rci: Option<Vec<RciTable>>,
    counts: Option<UserCounts>,
    partition: Option<Partition>,
}

impl Context<'_> {
    fn rci(&mut self) -> Result<&[RciTable]> {
        if self.rci.is_none() {
            let tables = rci::rci_tables(&self.graphs, &self.network);
            for t in &tables {
                rci::rci_conservation_check(t)?;
            }
            self.rci = Some(tables);
        }
        Ok(self.rci.as_deref().expect("just set"))
    }

    fn counts(&mut self) -> &UserCounts {
        self.counts
            .get_or_insert_with(|| metrics::exposure_adoption_counts(&self.graphs, &self.network))
    }

    fn partition(&mut self) -> Result<&Partition> {
        if self.partition.is_none() {
            let p = match &self.config.partition {
                Some(path) => {
                    let p = io::read_partition_file(path, &self.network)?;
                    p.with_modularity(&self.network, self.config.resolution)
                }
                None => community::louvain(&self.network, self.config.resolution, self.config.seed),
            };
            self.partition = Some(p);
        }
        Ok(self.partition.as_ref().expect("just set"))
    }
}

/// Runs the configured analyses on already-loaded inputs.
pub fn analyze(config: &RunConfig, inputs: Inputs) -> Result<Report> {
    let Inputs {
        mut network,
        edge_report,
        posts,
        reposts,
    } = inputs;
    let (cascades, cascade_report) = cascade::load_cascades(&posts, &reposts, &mut network);
    let graphs = cascade::build_all(&cascades, &network);
    info!("{} cascades, {} reposts kept", graphs.len(), cascade_report.reposts_kept);

    let mut report = Report {
        config_hash: config.hash(),
        summary: None,
        regression: None,
        partition: None,
        observed_ratios: None,
        bootstrap: None,
        funnel: None,
        correlations: Vec::new(),
        tables: Vec::new(),
        warnings: Vec::new(),
    };
    let mut ctx = Context {
        config,
        network,
        graphs,
        rci: None,
        counts: None,
        partition: None,
    };

    if config.wants(Analysis::Ingest) {
        report.tables.push(ingest_table(&edge_report, &cascade_report, &ctx.network));
    }
    if config.wants(Analysis::Summary) {
        let mode = config
            .diameter_mode
            .unwrap_or_else(|| summary::default_diameter_mode(&ctx.network));
        let d = summary::diameter(&ctx.network, mode, config.seed);
        let s = summary::summarize_dataset(&ctx.network, &ctx.graphs, d, config.cascade_size_mode);
        report.tables.push(summary_table(&config.dataset, &s));
        report.summary = Some(s);
    }
    if config.wants(Analysis::Classify) {
        report.tables.push(post_links_table(&ctx.graphs, &ctx.network));
    }
    if config.wants(Analysis::Distance) {
        report.tables.push(distance_table(&cascade::distance_profile(&ctx.graphs)));
    }
    if config.wants(Analysis::Rci) {
        let tables = ctx.rci()?;
        report.tables.push(rci_feature_table(tables));
        let dist = rci::rci_distribution(tables, &rci::default_rci_edges())?;
        report.tables.push(histogram_table(
            "rci_histogram",
            &[("explicit", &dist.explicit), ("implicit", &dist.implicit)],
        ));
    }
    if config.wants(Analysis::Regress) {
        let reg = rci::rci_regression(ctx.rci()?)?;
        for w in &reg.warnings {
            warn!("{w}");
        }
        report.warnings.extend(reg.warnings.iter().cloned());
        report.tables.push(regression_table(&reg));
        report.regression = Some(reg);
    }
    if config.wants(Analysis::Community) || config.wants(Analysis::Nullmodel) {
        ctx.partition()?;
        let p = ctx.partition.as_ref().expect("computed");
        let observed = community::intra_community_ratio(&ctx.graphs, p);
        if config.wants(Analysis::Community) {
            let mut t = Table::new("communities", &["user_id", "community_id"]);
            for (u, &id) in ctx.network.user_ids().iter().enumerate() {
                t.push(vec![id.to_string(), p.community(u as Node).to_string()]);
            }
            report.tables.push(t);
            report.tables.push(community_table(p, &observed));
        }
        if config.wants(Analysis::Nullmodel) {
            let boot = nullmodel::bootstrap_intra_ratio(
                &ctx.graphs,
                &ctx.network,
                p,
                config.n_null,
                config.n_boot,
                config.seed,
            )?;
            if boot.fallbacks > 0 {
                let msg = format!(
                    "null model kept the original user for {} of {} substituted reposts",
                    boot.fallbacks, boot.null_reposts
                );
                warn!("{msg}");
                report.warnings.push(msg);
            }
            report.tables.push(null_table(&config.dataset, &observed, &boot));
            report.bootstrap = Some(boot);
        }
        report.observed_ratios = Some(observed);
        report.partition = ctx.partition.clone();
    }
    if config.wants(Analysis::Metrics) || config.wants(Analysis::Homophily) {
        let mutual = ctx.network.mutual_graph();
        let counts = ctx.counts().clone();
        let pops = metrics::apply_filters(&counts, &mutual, config.min_events, config.require_mutual);
        if config.wants(Analysis::Metrics) {
            report.tables.push(user_metrics_table(&ctx.network, &counts, &mutual, config.min_events));
            report.tables.push(funnel_table(&pops));
            report.tables.push(metric_histograms(&counts, &pops)?);
        }
        if config.wants(Analysis::Homophily) {
            let rows = homophily_rows(config, &ctx.network, &mutual, &counts, &pops);
            report.tables.push(correlation_table(&rows));
            report.correlations = rows;
        }
        report.funnel = Some(pops.funnel);
    }
    Ok(report)
}

fn homophily_rows(
    config: &RunConfig,
    network: &FollowNetwork,
    mutual: &crate::graph::MutualGraph,
    counts: &UserCounts,
    pops: &Populations,
) -> Vec<CorrelationRow> {
    let n = counts.node_count();
    let values = |members: &[Node], f: &dyn Fn(Node) -> Option<f64>| -> Vec<Option<f64>> {
        let mut v = vec![None; n];
        for &u in members {
            v[u as usize] = f(u);
        }
        v
    };
    let mut rows = Vec::new();
    let metrics: [(&str, &[Node], &dyn Fn(Node) -> Option<f64>); 3] = [
        ("iar", &pops.adopters, &|u| counts.iar(u)),
        ("sar", &pops.adopters, &|u| counts.sar(u)),
        ("rer", &pops.receivers, &|u| counts.rer(u)),
    ];
    for (name, members, f) in metrics {
        let vals = values(members, f);
        rows.extend(homophily::correlation_rows(
            name,
            &vals,
            network,
            mutual,
            config.max_distance,
            config.p_value,
        ));
    }
    rows
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn ingest_table(edges: &LoadReport, cascades: &CascadeLoadReport, network: &FollowNetwork) -> Table {
    let mut t = Table::new("ingest", &["item", "count"]);
    let items: [(&str, u64); 15] = [
        ("edge_records", edges.records),
        ("edges_kept", edges.edges),
        ("edge_self_loops", edges.self_loops),
        ("edge_duplicates", edges.duplicates),
        ("users", network.node_count() as u64),
        ("posts", cascades.posts),
        ("duplicate_posts", cascades.duplicate_posts),
        ("repost_records", cascades.repost_records),
        ("reposts_unknown_tweet", cascades.unknown_tweet),
        ("self_reposts", cascades.self_reposts),
        ("reposts_before_post", cascades.early_reposts),
        ("duplicate_reposts", cascades.duplicate_reposts),
        ("reposts_kept", cascades.reposts_kept),
        ("users_added_from_cascades", cascades.unknown_users_added),
        ("follow_links", network.edge_count() as u64),
    ];
    for (k, v) in items {
        t.push(vec![s(k), s(v)]);
    }
    t
}

fn summary_table(dataset: &str, sm: &DatasetSummary) -> Table {
    let mut t = Table::new(
        "summary",
        &[
            "dataset",
            "users",
            "follow_links",
            "density",
            "diameter",
            "diameter_mode",
            "posts",
            "reposts",
            "explicit_reposts",
            "explicit_ratio",
            "avg_cascade_size",
            "cascade_size_mode",
            "avg_reposts_per_cascade",
            "avg_participants_per_cascade",
        ],
    );
    t.push(vec![
        s(dataset),
        s(sm.users),
        s(sm.follow_links),
        fmt_opt(sm.density),
        s(sm.diameter.value),
        s(sm.diameter.mode.name()),
        s(sm.posts),
        s(sm.reposts),
        s(sm.explicit_reposts),
        fmt_opt(sm.explicit_ratio),
        fmt_opt(sm.avg_cascade_size()),
        s(sm.cascade_size_mode.name()),
        fmt_opt(sm.avg_reposts_per_cascade),
        fmt_opt(sm.avg_participants_per_cascade),
    ]);
    t
}

fn post_links_table(graphs: &[DiffusionGraph], network: &FollowNetwork) -> Table {
    let mut t = Table::new("post_links", &["tweet_id", "author", "implicit", "explicit"]);
    for c in cascade::post_link_counts(graphs, network) {
        t.push(vec![s(c.tweet_id), s(c.author), s(c.implicit), s(c.explicit)]);
    }
    t
}

fn distance_table(profile: &cascade::DistanceProfile) -> Table {
    let mut t = Table::new(
        "distance_profile",
        &[
            "distance",
            "users_at_distance",
            "reposting_users",
            "reposting_share",
            "implicit_reposts",
            "explicit_reposts",
            "implicit_share",
        ],
    );
    for r in profile.rows.iter().chain(std::iter::once(&profile.unreachable)) {
        t.push(vec![
            r.distance.map_or_else(|| s("unreachable"), s),
            s(r.users_at_distance),
            s(r.reposting_users),
            fmt_opt(r.reposting_share()),
            s(r.implicit_reposts),
            s(r.explicit_reposts),
            fmt_opt(r.implicit_share()),
        ]);
    }
    t
}

fn rci_feature_table(tables: &[RciTable]) -> Table {
    let mut t = Table::new(
        "rci_features",
        &["cascade_id", "user_id", "rci", "distance", "disconnected", "offset_s", "explicit"],
    );
    for table in tables {
        for r in &table.rows {
            t.push(vec![
                s(table.cascade_id),
                s(r.user_id),
                fmt_f64(r.rci),
                r.distance.map_or_else(|| s("NA"), s),
                flag(r.disconnected()),
                s(r.offset_s),
                flag(r.explicit()),
            ]);
        }
    }
    t
}

fn histogram_table(name: &str, series: &[(&str, &Histogram)]) -> Table {
    let mut t = Table::new(name, &["series", "lower", "upper", "count"]);
    for (label, h) in series {
        let first = h.edges.first().copied().unwrap_or(f64::NAN);
        let last = h.edges.last().copied().unwrap_or(f64::NAN);
        t.push(vec![s(label), s("-inf"), fmt_f64(first), s(h.underflow)]);
        for (i, c) in h.counts.iter().enumerate() {
            t.push(vec![s(label), fmt_f64(h.edges[i]), fmt_f64(h.edges[i + 1]), s(c)]);
        }
        t.push(vec![s(label), fmt_f64(last), s("inf"), s(h.overflow)]);
    }
    t
}

fn regression_table(reg: &RciRegression) -> Table {
    let mut t = Table::new("regression", &["term", "estimate", "hc3_se"]);
    for (j, name) in rci::COVARIATES.iter().enumerate() {
        t.push(vec![s(name), fmt_opt(reg.coefficients[j]), fmt_opt(reg.hc3_se[j])]);
    }
    t.push(vec![s("r_squared"), fmt_f64(reg.r_squared), s("NA")]);
    t.push(vec![s("adjusted_r_squared"), fmt_f64(reg.adjusted_r_squared), s("NA")]);
    t.push(vec![s("n"), s(reg.n), s("NA")]);
    t.push(vec![s("distance_placeholder"), fmt_f64(reg.distance_placeholder), s("NA")]);
    t
}

fn community_table(p: &Partition, observed: &IntraRatios) -> Table {
    let mut t = Table::new(
        "community_ratios",
        &["link_type", "same_community", "reposts", "ratio", "communities", "modularity"],
    );
    for link in [LinkType::Explicit, LinkType::Implicit] {
        let r = observed.get(link);
        t.push(vec![
            s(link),
            s(r.same),
            s(r.total),
            fmt_opt(r.ratio()),
            s(p.count()),
            fmt_f64(p.modularity),
        ]);
    }
    t
}

fn null_table(dataset: &str, observed: &IntraRatios, boot: &BootstrapResult) -> Table {
    let mut t = Table::new(
        "nullmodel",
        &["dataset", "link_type", "observed_ratio", "null_mean", "null_sd", "n_null", "n_boot", "seed"],
    );
    for link in [LinkType::Explicit, LinkType::Implicit] {
        let stat = boot.get(link);
        t.push(vec![
            s(dataset),
            s(link),
            fmt_opt(observed.get(link).ratio()),
            fmt_opt(stat.map(|x| x.mean)),
            fmt_opt(stat.map(|x| x.sd)),
            s(boot.n_null),
            s(boot.n_boot),
            s(boot.seed),
        ]);
    }
    t
}

fn user_metrics_table(
    network: &FollowNetwork,
    c: &UserCounts,
    mutual: &crate::graph::MutualGraph,
    min_events: u32,
) -> Table {
    let mut t = Table::new(
        "user_metrics",
        &[
            "user_id",
            "adopted",
            "exposed",
            "adopted_exposed",
            "received",
            "received_explicit",
            "iar",
            "sar",
            "rer",
            "pass_repost",
            "pass_received",
            "mutual",
        ],
    );
    for u in 0..c.node_count() as Node {
        if !c.is_active(u) {
            continue;
        }
        let i = u as usize;
        let has_mutual = i < mutual.node_count() && mutual.degree(u) > 0;
        t.push(vec![
            s(network.user_id(u)),
            s(c.adopted[i]),
            s(c.exposed[i]),
            s(c.adopted_exposed[i]),
            s(c.received[i]),
            s(c.received_explicit[i]),
            fmt_opt(c.iar(u)),
            fmt_opt(c.sar(u)),
            fmt_opt(c.rer(u)),
            flag(metrics::passes_repost(c, u, min_events)),
            flag(metrics::passes_received(c, u, min_events)),
            flag(has_mutual),
        ]);
    }
    t
}

fn funnel_table(p: &Populations) -> Table {
    let mut t = Table::new("funnel", &["filter", "min_events", "users", "users_with_mutual"]);
    let f = p.funnel;
    t.push(vec![s("repost"), s(p.min_events), s(f.pass_repost), s(f.pass_repost_mutual)]);
    t.push(vec![s("received"), s(p.min_events), s(f.pass_received), s(f.pass_received_mutual)]);
    t
}

/// Ten equal bins on [0, 1] with 1 itself in the last bin.
fn unit_edges() -> Vec<f64> {
    let mut e: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    e[10] = f64::from_bits(1.0f64.to_bits() + 1);
    e
}

fn metric_histograms(c: &UserCounts, p: &Populations) -> Result<Table> {
    let build = |members: &[Node], f: &dyn Fn(Node) -> Option<f64>| -> Result<Histogram> {
        let mut h = Histogram::new(unit_edges())?;
        for &u in members {
            if let Some(v) = f(u) {
                h.add(v);
            }
        }
        Ok(h)
    };
    let iar = build(&p.adopters, &|u| c.iar(u))?;
    let sar = build(&p.adopters, &|u| c.sar(u))?;
    let rer = build(&p.receivers, &|u| c.rer(u))?;
    let mut t = histogram_table("metric_histograms", &[("iar", &iar), ("sar", &sar), ("rer", &rer)]);
    t.name = "metric_histograms".into();
    Ok(t)
}

fn correlation_table(rows: &[CorrelationRow]) -> Table {
    let mut t = Table::new("homophily", &["metric", "mode", "key", "rho", "p", "n", "share"]);
    for r in rows {
        t.push(vec![
            r.metric.clone(),
            s(r.mode),
            r.key.clone(),
            fmt_opt(r.rho),
            fmt_opt(r.p),
            s(r.n),
            fmt_opt(r.share),
        ]);
    }
    t
}

/// Writes every table to `<out_dir>/<name>.csv`.
pub fn write_report(config: &RunConfig, report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for table in &report.tables {
        let header = Header {
            table: &table.name,
            rows: table.rows.len(),
            dataset: &config.dataset,
            config_hash: &report.config_hash,
            seed: config.seed,
            min_events: config.min_events,
            require_mutual: config.require_mutual,
            resolution: config.resolution,
            n_null: config.n_null,
            n_boot: config.n_boot,
            max_distance: config.max_distance,
            cascade_size_mode: config.cascade_size_mode,
            version: env!("CARGO_PKG_VERSION"),
        };
        let path = out_dir.join(format!("{}.csv", table.name));
        let file = fs::File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let mut out = std::io::BufWriter::new(file);
        io::write_table(&mut out, &header, table)?;
        std::io::Write::flush(&mut out)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_parsing() {
        let all = parse_analyses("all").unwrap();
        assert_eq!(all.len(), Analysis::ALL.len());
        let two = parse_analyses("summary, rci").unwrap();
        assert_eq!(two.into_iter().collect::<Vec<_>>(), vec![Analysis::Summary, Analysis::Rci]);
        assert!(parse_analyses("bogus").is_err());
        assert!(parse_analyses("").is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let base = RunConfig::new(
            "e".into(),
            CascadeInput::Tables { posts: "p".into(), reposts: "r".into() },
            "out".into(),
        );
        let mut other = base.clone();
        other.workers = Some(7);
        other.out_dir = "elsewhere".into();
        assert_eq!(base.hash(), other.hash());
        other.seed = 2;
        assert_ne!(base.hash(), other.hash());
        assert_eq!(base.hash().len(), 16);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(
            "e".into(),
            CascadeInput::Tables { posts: "p".into(), reposts: "r".into() },
            "out".into(),
        );
        assert!(c.validate().is_ok());
        c.resolution = 0.0;
        assert_eq!(c.validate().unwrap_err().kind(), crate::ErrorKind::Config);
    }
}
