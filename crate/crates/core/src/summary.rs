//! Dataset overview: size, density, diameter, repost counts and cascade sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::DiffusionGraph;
use crate::graph::{FollowNetwork, Node};

/// Networks with fewer nodes than this get an exact diameter.
pub const EXACT_DIAMETER_BELOW: usize = 100_000;
pub const DIAMETER_SWEEPS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiameterMode {
    Exact,
    DoubleSweep,
}

impl DiameterMode {
    pub fn name(self) -> &'static str {
        match self {
            DiameterMode::Exact => "exact",
            DiameterMode::DoubleSweep => "double-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Diameter {
    pub value: u32,
    pub mode: DiameterMode,
}

/// Largest finite directed distance. Exact by all-sources search, or a
/// lower bound from alternating forward and backward sweeps.
pub fn diameter(network: &FollowNetwork, mode: DiameterMode, seed: u64) -> Diameter {
    let n = network.node_count();
    if n == 0 {
        return Diameter { value: 0, mode };
    }
    let value = match mode {
        DiameterMode::Exact => (0..n as Node)
            .into_par_iter()
            .map(|s| network.influence_distance(s).expect("in range").max_distance())
            .max()
            .unwrap_or(0),
        DiameterMode::DoubleSweep => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let starts: Vec<Node> = (0..DIAMETER_SWEEPS)
                .map(|_| rng.gen_range(0..n as Node))
                .collect();
            starts
                .par_iter()
                .map(|&s| {
                    let forward = network.influence_distance(s).expect("in range");
                    let backward = network.reverse_distance(forward.farthest());
                    let again = network.influence_distance(backward.farthest()).expect("in range");
                    forward
                        .max_distance()
                        .max(backward.max_distance())
                        .max(again.max_distance())
                })
                .max()
                .unwrap_or(0)
        }
    };
    Diameter { value, mode }
}

pub fn default_diameter_mode(network: &FollowNetwork) -> DiameterMode {
    if network.node_count() < EXACT_DIAMETER_BELOW {
        DiameterMode::Exact
    } else {
        DiameterMode::DoubleSweep
    }
}

/// Which participants count toward the average cascade size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CascadeSizeMode {
    /// Reposts per cascade.
    #[default]
    Reposts,
    /// Author plus reposts.
    Participants,
}

impl CascadeSizeMode {
    pub fn name(self) -> &'static str {
        match self {
            CascadeSizeMode::Reposts => "reposts",
            CascadeSizeMode::Participants => "participants",
        }
    }
}

impl std::str::FromStr for CascadeSizeMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "reposts" => Ok(CascadeSizeMode::Reposts),
            "participants" => Ok(CascadeSizeMode::Participants),
            other => Err(crate::Error::Config(format!("unknown cascade size mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub follow_links: usize,
    pub density: Option<f64>,
    pub diameter: Diameter,
    pub posts: usize,
    pub reposts: u64,
    pub explicit_reposts: u64,
    pub explicit_ratio: Option<f64>,
    pub avg_reposts_per_cascade: Option<f64>,
    pub avg_participants_per_cascade: Option<f64>,
    pub cascade_size_mode: CascadeSizeMode,
}

impl DatasetSummary {
    pub fn avg_cascade_size(&self) -> Option<f64> {
        match self.cascade_size_mode {
            CascadeSizeMode::Reposts => self.avg_reposts_per_cascade,
            CascadeSizeMode::Participants => self.avg_participants_per_cascade,
        }
    }
}

pub fn summarize_dataset(
    network: &FollowNetwork,
    graphs: &[DiffusionGraph],
    diameter: Diameter,
    cascade_size_mode: CascadeSizeMode,
) -> DatasetSummary {
    let n = network.node_count();
    let e = network.edge_count();
    let posts = graphs.len();
    let reposts: u64 = graphs.iter().map(|g| g.repost_count() as u64).sum();
    let explicit: u64 = graphs.iter().map(|g| g.explicit_count() as u64).sum();
    let per_post = |extra: u64| (posts > 0).then(|| (reposts + extra) as f64 / posts as f64);
    DatasetSummary {
        users: n,
        follow_links: e,
        density: (n > 1).then(|| e as f64 / (n as f64 * (n as f64 - 1.0))),
        diameter,
        posts,
        reposts,
        explicit_reposts: explicit,
        explicit_ratio: (reposts > 0).then(|| explicit as f64 / reposts as f64),
        avg_reposts_per_cascade: per_post(0),
        avg_participants_per_cascade: per_post(posts as u64),
        cascade_size_mode,
    }
}
