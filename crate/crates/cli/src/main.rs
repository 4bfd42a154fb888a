use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use implink::pipeline::{self, parse_analyses, write_report, Analysis, CascadeInput, RunConfig};
use implink::stats::PValueMethod;
use implink::summary::{CascadeSizeMode, DiameterMode};
use implink::{Error, ErrorKind};

#[derive(Parser, Debug)]
#[command(name = "implink", version, about = "Explicit and implicit diffusion analytics for repost cascades")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: Global,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Load inputs and report record counts and drops.
    Ingest,
    /// Dataset overview table.
    Summary,
    /// Implicit and explicit repost counts per post.
    Classify,
    /// Repost profile by influence distance from the author.
    Distance,
    /// Repost contribution index per repost and its distribution.
    Rci,
    /// Standardized regression of RCI on repost covariates.
    Regress,
    /// Louvain partition and intra-community ratios.
    Community,
    /// Null-model bootstrap of intra-community ratios.
    Nullmodel,
    /// Per-user IAR, SAR and RER with filter funnel.
    Metrics,
    /// Neighbor and exact-distance Spearman correlations.
    Homophily,
    /// Every analysis selected by --analyses (default all).
    ReportAll,
}

impl Command {
    fn analysis(self) -> Option<Analysis> {
        Some(match self {
            Command::Ingest => Analysis::Ingest,
            Command::Summary => Analysis::Summary,
            Command::Classify => Analysis::Classify,
            Command::Distance => Analysis::Distance,
            Command::Rci => Analysis::Rci,
            Command::Regress => Analysis::Regress,
            Command::Community => Analysis::Community,
            Command::Nullmodel => Analysis::Nullmodel,
            Command::Metrics => Analysis::Metrics,
            Command::Homophily => Analysis::Homophily,
            Command::ReportAll => return None,
        })
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SizeMode {
    Reposts,
    Participants,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum DiameterArg {
    Auto,
    Exact,
    Sweep,
}

#[derive(Args, Debug)]
struct Global {
    /// Follow edge list, one `follower followee` pair per line.
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    /// Post table: `tweet_id author_id time`.
    #[arg(long, global = true, requires = "reposts", conflicts_with = "activity")]
    posts: Option<PathBuf>,
    /// Repost table: `tweet_id user_id time`.
    #[arg(long, global = true, requires = "posts")]
    reposts: Option<PathBuf>,
    /// Activity log: `user_a user_b time kind`.
    #[arg(long, global = true)]
    activity: Option<PathBuf>,
    /// Interaction kind in the activity log that marks a repost.
    #[arg(long, global = true, default_value = "RT")]
    activity_tag: String,
    /// Read edge columns as `followee follower`.
    #[arg(long, global = true)]
    swap_columns: bool,
    /// Dataset label written into reports.
    #[arg(long, global = true, default_value = "dataset")]
    dataset: String,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 5)]
    min_events: u32,
    /// Keep users without a reciprocated follow in metric populations.
    #[arg(long, global = true)]
    no_mutual_filter: bool,
    /// Louvain resolution.
    #[arg(long, global = true, default_value_t = 1.0)]
    resolution: f64,
    #[arg(long, global = true, default_value_t = 10)]
    n_null: u32,
    #[arg(long, global = true, default_value_t = 1000)]
    n_boot: u32,
    /// Comma-separated analyses for report-all, or `all`.
    #[arg(long, global = true, default_value = "all")]
    analyses: String,
    /// Existing `user_id,community_id` file to use instead of Louvain.
    #[arg(long, global = true)]
    partition: Option<PathBuf>,
    /// Largest exact distance for homophily rows.
    #[arg(long, global = true, default_value_t = 4)]
    max_distance: u32,
    #[arg(long, global = true, value_enum, default_value_t = SizeMode::Reposts)]
    cascade_size: SizeMode,
    #[arg(long, global = true, value_enum, default_value_t = DiameterArg::Auto)]
    diameter: DiameterArg,
    /// Use seeded permutation p-values with this many permutations.
    #[arg(long, global = true)]
    permutations: Option<usize>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let g = &cli.global;
    let edges = g
        .edges
        .clone()
        .ok_or_else(|| Error::Config("--edges is required".into()))?;
    let cascades = match (&g.posts, &g.reposts, &g.activity) {
        (Some(p), Some(r), None) => CascadeInput::Tables {
            posts: p.clone(),
            reposts: r.clone(),
        },
        (None, None, Some(a)) => CascadeInput::Activity {
            log: a.clone(),
            tag: g.activity_tag.clone(),
        },
        _ => {
            return Err(Error::Config(
                "give either --posts and --reposts, or --activity".into(),
            ))
        }
    };
    let mut config = RunConfig::new(edges, cascades, g.out.clone());
    config.dataset = g.dataset.clone();
    config.swap_columns = g.swap_columns;
    config.seed = g.seed;
    config.workers = g.workers;
    config.min_events = g.min_events;
    config.require_mutual = !g.no_mutual_filter;
    config.resolution = g.resolution;
    config.n_null = g.n_null;
    config.n_boot = g.n_boot;
    config.max_distance = g.max_distance;
    config.partition = g.partition.clone();
    config.cascade_size_mode = match g.cascade_size {
        SizeMode::Reposts => CascadeSizeMode::Reposts,
        SizeMode::Participants => CascadeSizeMode::Participants,
    };
    config.diameter_mode = match g.diameter {
        DiameterArg::Auto => None,
        DiameterArg::Exact => Some(DiameterMode::Exact),
        DiameterArg::Sweep => Some(DiameterMode::DoubleSweep),
    };
    if let Some(permutations) = g.permutations {
        config.p_value = PValueMethod::Permutation {
            permutations,
            seed: g.seed,
        };
    }
    config.analyses = match cli.command.analysis() {
        Some(a) => [a].into_iter().collect(),
        None => parse_analyses(&g.analyses)?,
    };
    config.validate()?;
    Ok(config)
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::InputFormat => 3,
        ErrorKind::Precondition => 4,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = build_config(cli)?;
    let report = pipeline::run_pipeline(&config)?;
    for path in write_report(&config, &report, &config.out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
