//! Community-agnostic counterfactual cascades and the bootstrap baseline
//! for intra-community ratios.
//!
//! Each repost keeps its time and label. Implicit reposters are swapped for
//! a random user at the same influence distance from the author; explicit
//! reposters are swapped for a random follower of the substitute of one of
//! their in-neighbors.

use std::cell::OnceCell;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{DiffusionGraph, LinkType, Timestamp, TweetId};
use crate::community::{IntraRatios, Partition};
use crate::error::{Error, Result};
use crate::graph::{FollowNetwork, InfluenceDistances, Node};
use crate::stats;

const REJECTION_TRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NullRepost {
    pub original: Node,
    pub user: Node,
    pub time: Timestamp,
    pub label: LinkType,
    /// Substitute of the referenced in-neighbor, for explicit reposts.
    pub referent: Option<Node>,
    /// The candidate pool was empty and the original user was kept.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NullCascade {
    pub tweet_id: TweetId,
    pub replicate: u32,
    pub author: Node,
    pub reposts: Vec<NullRepost>,
}

impl NullCascade {
    pub fn fallbacks(&self) -> usize {
        self.reposts.iter().filter(|r| r.fallback).count()
    }

    /// `(original, substitute)` per repost.
    pub fn replacements(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.reposts.iter().map(|r| (r.original, r.user))
    }

    pub fn intra_counts(&self, partition: &Partition) -> IntraRatios {
        let home = partition.community(self.author);
        let mut out = IntraRatios::default();
        for r in &self.reposts {
            out.record(r.label, partition.community(r.user) == home);
        }
        out
    }
}

/// Distance layers around one author, with the unreachable set built on
/// first use.
pub struct AuthorPools {
    distances: InfluenceDistances,
    unreachable: OnceCell<Vec<Node>>,
}

impl AuthorPools {
    pub fn new(network: &FollowNetwork, author: Node) -> Result<Self> {
        Ok(AuthorPools {
            distances: network.influence_distance(author)?,
            unreachable: OnceCell::new(),
        })
    }

    pub fn author(&self) -> Node {
        self.distances.source()
    }

    fn pool(&self, distance: Option<u32>) -> &[Node] {
        match distance {
            Some(d) => self.distances.layer(d),
            None => self
                .unreachable
                .get_or_init(|| self.distances.unreachable_nodes()),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED, |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Uniform draw from `pool` avoiding `excluded` members.
fn draw(pool: &[Node], excluded: &HashSet<Node>, rng: &mut ChaCha8Rng) -> Option<Node> {
    if pool.is_empty() {
        return None;
    }
    for _ in 0..REJECTION_TRIES {
        let c = pool[rng.gen_range(0..pool.len())];
        if !excluded.contains(&c) {
            return Some(c);
        }
    }
    let allowed: Vec<Node> = pool.iter().copied().filter(|c| !excluded.contains(c)).collect();
    (!allowed.is_empty()).then(|| allowed[rng.gen_range(0..allowed.len())])
}

/// Generates one null cascade using precomputed pools for the author.
pub fn generate_with_pools(
    graph: &DiffusionGraph,
    network: &FollowNetwork,
    pools: &AuthorPools,
    seed: u64,
    replicate: u32,
) -> NullCascade {
    debug_assert_eq!(pools.author(), graph.author());
    let author = graph.author();
    let n = graph.repost_count();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[seed, graph.tweet_id(), replicate as u64]));
    let mut excluded: HashSet<Node> = HashSet::with_capacity(n + 1);
    excluded.insert(author);
    let mut reposts: Vec<NullRepost> = Vec::with_capacity(n);
    for i in 0..n {
        rng.set_word_pos((i as u128) << 32);
        let original = graph.reposter(i);
        let label = graph.label(i);
        let (pick, referent) = match label {
            LinkType::Implicit => (draw(pools.pool(graph.source_distance(i)), &excluded, &mut rng), None),
            LinkType::Explicit => {
                let nb = graph.in_neighbors(i);
                let q = nb[rng.gen_range(0..nb.len())] as usize;
                let mapped = if q == 0 { author } else { reposts[q - 1].user };
                (draw(network.followers_of(mapped), &excluded, &mut rng), Some(mapped))
            }
        };
        let user = pick.unwrap_or(original);
        excluded.insert(user);
        reposts.push(NullRepost {
            original,
            user,
            time: graph.repost_time(i),
            label,
            referent,
            fallback: pick.is_none(),
        });
    }
    NullCascade {
        tweet_id: graph.tweet_id(),
        replicate,
        author,
        reposts,
    }
}

/// Generates one null cascade. Draws depend only on `(seed, tweet id,
/// replicate, repost index)` and the preceding substitutes.
pub fn generate_null_cascade(
    graph: &DiffusionGraph,
    network: &FollowNetwork,
    seed: u64,
    replicate: u32,
) -> Result<NullCascade> {
    let pools = AuthorPools::new(network, graph.author())?;
    Ok(generate_with_pools(graph, network, &pools, seed, replicate))
}

/// Runs `f` over every cascade with pools shared per author. Results follow
/// the order of `graphs`.
fn per_cascade<T: Send>(
    graphs: &[DiffusionGraph],
    network: &FollowNetwork,
    f: impl Fn(&DiffusionGraph, &AuthorPools) -> T + Sync,
) -> Vec<T> {
    let mut groups: std::collections::BTreeMap<Node, Vec<usize>> = Default::default();
    for (i, g) in graphs.iter().enumerate() {
        groups.entry(g.author()).or_default().push(i);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let mut out: Vec<(usize, T)> = groups
        .par_iter()
        .flat_map_iter(|(author, members)| {
            let pools = AuthorPools::new(network, *author).expect("authors are network nodes");
            members
                .iter()
                .map(|&i| (i, f(&graphs[i], &pools)))
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_unstable_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, t)| t).collect()
}

/// `n_null` null cascades per input cascade, in input order.
pub fn generate_all(
    graphs: &[DiffusionGraph],
    network: &FollowNetwork,
    n_null: u32,
    seed: u64,
) -> Vec<Vec<NullCascade>> {
    per_cascade(graphs, network, |g, pools| {
        (0..n_null)
            .map(|r| generate_with_pools(g, network, pools, seed, r))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullStat {
    pub mean: f64,
    pub sd: f64,
    /// Replicates whose ratio was defined.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub explicit: Option<NullStat>,
    pub implicit: Option<NullStat>,
    pub n_null: u32,
    pub n_boot: u32,
    pub seed: u64,
    pub fallbacks: u64,
    pub null_reposts: u64,
}

impl BootstrapResult {
    pub fn get(&self, link: LinkType) -> Option<&NullStat> {
        match link {
            LinkType::Explicit => self.explicit.as_ref(),
            LinkType::Implicit => self.implicit.as_ref(),
        }
    }
}

fn summarize(ratios: &[f64]) -> Option<NullStat> {
    if ratios.is_empty() {
        return None;
    }
    let sd = if ratios.len() > 1 {
        stats::sample_sd(ratios)
    } else {
        0.0
    };
    Some(NullStat {
        mean: stats::mean(ratios),
        sd,
        replicates: ratios.len(),
    })
}

/// Bootstrap of the intra-community ratio under the null model. Each
/// replicate resamples cascades with replacement and pools the reposts of
/// their null cascades.
pub fn bootstrap_intra_ratio(
    graphs: &[DiffusionGraph],
    network: &FollowNetwork,
    partition: &Partition,
    n_null: u32,
    n_boot: u32,
    seed: u64,
) -> Result<BootstrapResult> {
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("no cascades to bootstrap".into()));
    }
    if n_null == 0 || n_boot == 0 {
        return Err(Error::InvalidArgument("n_null and n_boot must be positive".into()));
    }
    let per: Vec<(IntraRatios, u64, u64)> = per_cascade(graphs, network, |g, pools| {
        let mut counts = IntraRatios::default();
        let mut fallbacks = 0;
        let mut total = 0;
        for r in 0..n_null {
            let null = generate_with_pools(g, network, pools, seed, r);
            counts = counts.merge(null.intra_counts(partition));
            fallbacks += null.fallbacks() as u64;
            total += null.reposts.len() as u64;
        }
        (counts, fallbacks, total)
    });
    let n = per.len();
    let samples: Vec<IntraRatios> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[seed, u64::MAX, b as u64]));
            (0..n).fold(IntraRatios::default(), |acc, _| {
                acc.merge(per[rng.gen_range(0..n)].0)
            })
        })
        .collect();
    let explicit: Vec<f64> = samples.iter().filter_map(|s| s.explicit.ratio()).collect();
    let implicit: Vec<f64> = samples.iter().filter_map(|s| s.implicit.ratio()).collect();
    Ok(BootstrapResult {
        explicit: summarize(&explicit),
        implicit: summarize(&implicit),
        n_null,
        n_boot,
        seed,
        fallbacks: per.iter().map(|p| p.1).sum(),
        null_reposts: per.iter().map(|p| p.2).sum(),
    })
}
