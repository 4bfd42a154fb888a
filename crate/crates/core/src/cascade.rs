//! Cascade reconstruction.
//!
//! A cascade is one original post plus its reposts in a total order: the
//! post comes first, reposts follow by `(timestamp, log position)`. A
//! diffusion graph links `u -> v` whenever `v` follows `u` and `u` comes
//! strictly earlier in that order. A repost with no incoming link is an
//! implicit-link repost; all others are explicit.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{FollowNetwork, InfluenceDistances, Node, UserId};

pub type TweetId = u64;
/// Seconds; only the ordering matters.
pub type Timestamp = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostRecord {
    pub tweet: TweetId,
    pub author: UserId,
    pub time: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepostRecord {
    pub tweet: TweetId,
    pub user: UserId,
    pub time: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepostEvent {
    pub user: Node,
    pub time: Timestamp,
    /// Position in the repost log; breaks timestamp ties.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cascade {
    pub tweet_id: TweetId,
    pub author: Node,
    pub post_time: Timestamp,
    pub reposts: Vec<RepostEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CascadeLoadReport {
    pub posts: u64,
    pub duplicate_posts: u64,
    pub repost_records: u64,
    pub unknown_tweet: u64,
    pub self_reposts: u64,
    pub early_reposts: u64,
    pub duplicate_reposts: u64,
    pub reposts_kept: u64,
    pub unknown_users_added: u64,
}

/// Groups post and repost records into cascades, in post-log order.
///
/// Users missing from `network` are appended to it as isolated nodes.
pub fn load_cascades(
    posts: &[PostRecord],
    reposts: &[RepostRecord],
    network: &mut FollowNetwork,
) -> (Vec<Cascade>, CascadeLoadReport) {
    let mut report = CascadeLoadReport::default();
    let mut by_tweet: HashMap<TweetId, usize> = HashMap::with_capacity(posts.len());
    let mut heads: Vec<(PostRecord, Node)> = Vec::with_capacity(posts.len());
    for p in posts {
        if by_tweet.contains_key(&p.tweet) {
            report.duplicate_posts += 1;
            continue;
        }
        let (author, added) = network.intern_isolated(p.author);
        report.unknown_users_added += added as u64;
        by_tweet.insert(p.tweet, heads.len());
        heads.push((*p, author));
    }
    report.posts = heads.len() as u64;

    // Earliest event per (cascade, user).
    let mut earliest: Vec<HashMap<UserId, (Timestamp, u64)>> = vec![HashMap::new(); heads.len()];
    for (seq, r) in reposts.iter().enumerate() {
        report.repost_records += 1;
        let Some(&ci) = by_tweet.get(&r.tweet) else {
            report.unknown_tweet += 1;
            continue;
        };
        let post = heads[ci].0;
        if r.user == post.author {
            report.self_reposts += 1;
            continue;
        }
        if r.time < post.time {
            report.early_reposts += 1;
            continue;
        }
        let key = (r.time, seq as u64);
        match earliest[ci].entry(r.user) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                report.duplicate_reposts += 1;
                if key < *e.get() {
                    e.insert(key);
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(key);
            }
        }
    }

    let mut cascades = Vec::with_capacity(heads.len());
    for ((post, author), users) in heads.into_iter().zip(earliest) {
        let mut events: Vec<(Timestamp, u64, UserId)> =
            users.into_iter().map(|(u, (t, s))| (t, s, u)).collect();
        events.sort_unstable();
        let reposts = events
            .into_iter()
            .map(|(time, seq, uid)| {
                let (user, added) = network.intern_isolated(uid);
                report.unknown_users_added += added as u64;
                RepostEvent { user, time, seq }
            })
            .collect::<Vec<_>>();
        report.reposts_kept += reposts.len() as u64;
        cascades.push(Cascade {
            tweet_id: post.tweet,
            author,
            post_time: post.time,
            reposts,
        });
    }
    (cascades, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkType {
    Explicit,
    Implicit,
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkType::Explicit => "explicit",
            LinkType::Implicit => "implicit",
        })
    }
}

/// Inferred propagation structure of one cascade.
///
/// Participants are indexed in cascade order: index 0 is the author and
/// index `i + 1` is repost `i`.
#[derive(Debug, Clone)]
pub struct DiffusionGraph {
    tweet_id: TweetId,
    users: Vec<Node>,
    times: Vec<Timestamp>,
    pred_offsets: Vec<usize>,
    preds: Vec<u32>,
    distances: Vec<Option<u32>>,
    layer_sizes: Arc<[u64]>,
    unreachable_nodes: u64,
}

impl DiffusionGraph {
    /// Builds the graph using precomputed distances from the cascade author.
    pub fn build(
        cascade: &Cascade,
        network: &FollowNetwork,
        from_author: &InfluenceDistances,
    ) -> Self {
        let layer_sizes: Arc<[u64]> = from_author.layer_sizes().into();
        Self::build_shared(
            cascade,
            network,
            from_author,
            layer_sizes,
            from_author.unreachable_count() as u64,
        )
    }

    fn build_shared(
        cascade: &Cascade,
        network: &FollowNetwork,
        from_author: &InfluenceDistances,
        layer_sizes: Arc<[u64]>,
        unreachable_nodes: u64,
    ) -> Self {
        debug_assert_eq!(from_author.source(), cascade.author);
        let n = cascade.reposts.len();
        let mut users = Vec::with_capacity(n + 1);
        let mut times = Vec::with_capacity(n + 1);
        users.push(cascade.author);
        times.push(cascade.post_time);
        for r in &cascade.reposts {
            users.push(r.user);
            times.push(r.time);
        }

        let mut position: HashMap<Node, u32> = HashMap::with_capacity(n + 1);
        position.insert(cascade.author, 0);
        let mut pred_offsets = Vec::with_capacity(n + 1);
        pred_offsets.push(0);
        let mut preds = Vec::new();
        let mut distances = Vec::with_capacity(n);
        for (i, r) in cascade.reposts.iter().enumerate() {
            let p = i + 1;
            let followees = network.followees_of(r.user);
            let start = preds.len();
            if followees.len() <= p {
                preds.extend(followees.iter().filter_map(|f| position.get(f).copied()));
                preds[start..].sort_unstable();
            } else {
                preds.extend(
                    (0..p as u32).filter(|&q| network.follows(r.user, users[q as usize])),
                );
            }
            pred_offsets.push(preds.len());
            position.insert(r.user, p as u32);
            distances.push(from_author.get(r.user));
        }

        DiffusionGraph {
            tweet_id: cascade.tweet_id,
            users,
            times,
            pred_offsets,
            preds,
            distances,
            layer_sizes,
            unreachable_nodes,
        }
    }

    pub fn tweet_id(&self) -> TweetId {
        self.tweet_id
    }

    pub fn author(&self) -> Node {
        self.users[0]
    }

    pub fn repost_count(&self) -> usize {
        self.users.len() - 1
    }

    /// User behind repost `i`.
    pub fn reposter(&self, i: usize) -> Node {
        self.users[i + 1]
    }

    pub fn repost_time(&self, i: usize) -> Timestamp {
        self.times[i + 1]
    }

    pub fn post_time(&self) -> Timestamp {
        self.times[0]
    }

    /// In-neighbors of repost `i` as participant indices (0 = author).
    pub fn in_neighbors(&self, i: usize) -> &[u32] {
        &self.preds[self.pred_offsets[i]..self.pred_offsets[i + 1]]
    }

    pub fn is_explicit(&self, i: usize) -> bool {
        self.pred_offsets[i + 1] > self.pred_offsets[i]
    }

    pub fn label(&self, i: usize) -> LinkType {
        if self.is_explicit(i) {
            LinkType::Explicit
        } else {
            LinkType::Implicit
        }
    }

    /// Earlier reposts by followees of the reposter, as repost indices.
    /// The original post is never a member.
    pub fn predecessor_set_b(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_neighbors(i)
            .iter()
            .filter(|&&q| q != 0)
            .map(|&q| q as usize - 1)
    }

    pub fn b_size(&self, i: usize) -> usize {
        let nb = self.in_neighbors(i);
        nb.len() - usize::from(nb.first() == Some(&0))
    }

    /// Reposts whose predecessor set contains repost `w`.
    pub fn successor_set_f(&self, w: usize) -> Vec<usize> {
        let target = (w + 1) as u32;
        (w + 1..self.repost_count())
            .filter(|&v| self.in_neighbors(v).binary_search(&target).is_ok())
            .collect()
    }

    /// Hop distance of repost `i`'s user from the author.
    pub fn source_distance(&self, i: usize) -> Option<u32> {
        self.distances[i]
    }

    /// Diffusion edges as `(from, to)` user pairs.
    pub fn edges(&self) -> Vec<(Node, Node)> {
        (0..self.repost_count())
            .flat_map(|i| {
                self.in_neighbors(i)
                    .iter()
                    .map(move |&q| (self.users[q as usize], self.users[i + 1]))
            })
            .collect()
    }

    pub fn explicit_count(&self) -> usize {
        (0..self.repost_count()).filter(|&i| self.is_explicit(i)).count()
    }

    /// Network-wide node counts per distance from the author (index 0 is the author).
    pub fn layer_sizes(&self) -> &[u64] {
        &self.layer_sizes
    }

    /// Network nodes the author cannot reach.
    pub fn unreachable_nodes(&self) -> u64 {
        self.unreachable_nodes
    }
}

/// Builds one diffusion graph, running the distance search itself.
pub fn build_diffusion_graph(cascade: &Cascade, network: &FollowNetwork) -> Result<DiffusionGraph> {
    let dist = network.influence_distance(cascade.author)?;
    Ok(DiffusionGraph::build(cascade, network, &dist))
}

/// Cascade indices grouped by author, authors ascending.
pub(crate) fn group_by_author(cascades: &[Cascade]) -> Vec<(Node, Vec<usize>)> {
    let mut groups: BTreeMap<Node, Vec<usize>> = BTreeMap::new();
    for (i, c) in cascades.iter().enumerate() {
        groups.entry(c.author).or_default().push(i);
    }
    groups.into_iter().collect()
}

/// Builds every diffusion graph with one breadth-first search per distinct
/// author. Output order follows `cascades`.
pub fn build_all(cascades: &[Cascade], network: &FollowNetwork) -> Vec<DiffusionGraph> {
    let groups = group_by_author(cascades);
    let mut built: Vec<(usize, DiffusionGraph)> = groups
        .par_iter()
        .flat_map_iter(|(author, members)| {
            let dist = network
                .influence_distance(*author)
                .expect("cascade authors are interned in the network");
            let layers: Arc<[u64]> = dist.layer_sizes().into();
            let unreachable = dist.unreachable_count() as u64;
            members
                .iter()
                .map(|&ci| {
                    let g = DiffusionGraph::build_shared(
                        &cascades[ci],
                        network,
                        &dist,
                        layers.clone(),
                        unreachable,
                    );
                    (ci, g)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    built.sort_unstable_by_key(|(i, _)| *i);
    built.into_iter().map(|(_, g)| g).collect()
}

/// One row of the distance profile. `distance` is `None` for the
/// unreachable bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DistanceRow {
    pub distance: Option<u32>,
    pub users_at_distance: u64,
    pub reposting_users: u64,
    pub implicit_reposts: u64,
    pub explicit_reposts: u64,
}

impl DistanceRow {
    pub fn reposting_share(&self) -> Option<f64> {
        (self.users_at_distance > 0)
            .then(|| self.reposting_users as f64 / self.users_at_distance as f64)
    }

    pub fn implicit_share(&self) -> Option<f64> {
        (self.reposting_users > 0)
            .then(|| self.implicit_reposts as f64 / self.reposting_users as f64)
    }

    fn merge(&mut self, other: &DistanceRow) {
        self.users_at_distance += other.users_at_distance;
        self.reposting_users += other.reposting_users;
        self.implicit_reposts += other.implicit_reposts;
        self.explicit_reposts += other.explicit_reposts;
    }
}

/// Repost counts pooled over cascades, stratified by distance from the author.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DistanceProfile {
    pub rows: Vec<DistanceRow>,
    pub unreachable: DistanceRow,
}

impl DistanceProfile {
    fn of_graph(g: &DiffusionGraph) -> Self {
        let mut rows: Vec<DistanceRow> = g
            .layer_sizes()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, &users)| DistanceRow {
                distance: Some(d as u32),
                users_at_distance: users,
                ..Default::default()
            })
            .collect();
        let mut unreachable = DistanceRow {
            distance: None,
            users_at_distance: g.unreachable_nodes(),
            ..Default::default()
        };
        for i in 0..g.repost_count() {
            let row = match g.source_distance(i) {
                Some(d) => &mut rows[d as usize - 1],
                None => &mut unreachable,
            };
            row.reposting_users += 1;
            if g.is_explicit(i) {
                row.explicit_reposts += 1;
            } else {
                row.implicit_reposts += 1;
            }
        }
        DistanceProfile { rows, unreachable }
    }

    /// Associative merge.
    pub fn merge(mut self, other: DistanceProfile) -> Self {
        if other.rows.len() > self.rows.len() {
            let start = self.rows.len();
            self.rows.extend(other.rows[start..].iter().map(|r| DistanceRow {
                distance: r.distance,
                ..Default::default()
            }));
        }
        for (mine, theirs) in self.rows.iter_mut().zip(&other.rows) {
            mine.merge(theirs);
        }
        self.unreachable.merge(&other.unreachable);
        self
    }

    pub fn total_reposts(&self) -> u64 {
        self.rows.iter().map(|r| r.reposting_users).sum::<u64>() + self.unreachable.reposting_users
    }

    pub fn row(&self, d: u32) -> Option<&DistanceRow> {
        self.rows.get((d as usize).checked_sub(1)?)
    }
}

pub fn distance_profile(graphs: &[DiffusionGraph]) -> DistanceProfile {
    graphs
        .par_iter()
        .map(DistanceProfile::of_graph)
        .collect::<Vec<_>>()
        .into_iter()
        .fold(DistanceProfile::default(), DistanceProfile::merge)
}

/// Per-post implicit and explicit repost counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PostLinkCounts {
    pub tweet_id: TweetId,
    pub author: UserId,
    pub implicit: u64,
    pub explicit: u64,
}

pub fn post_link_counts(graphs: &[DiffusionGraph], network: &FollowNetwork) -> Vec<PostLinkCounts> {
    graphs
        .iter()
        .map(|g| {
            let explicit = g.explicit_count() as u64;
            PostLinkCounts {
                tweet_id: g.tweet_id(),
                author: network.user_id(g.author()),
                implicit: g.repost_count() as u64 - explicit,
                explicit,
            }
        })
        .collect()
}
