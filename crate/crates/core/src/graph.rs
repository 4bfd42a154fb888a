//! Follow network storage and traversal.
//!
//! Users are interned to dense node indices `0..N` in first-seen order. Both
//! directions of the follow relation are kept in CSR form:
//!
//! - followees of `u`: the users `u` follows (out-neighbors),
//! - followers of `u`: the users following `u` (in-neighbors).
//!
//! Information travels from a followee to its followers, so influence
//! distances are breadth-first searches over follower lists.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Dense node index.
pub type Node = u32;
/// External user identifier as it appears in the input files.
pub type UserId = u64;

const UNREACHED: u32 = u32::MAX;

/// Counters collected while building a [`FollowNetwork`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub records: u64,
    pub edges: u64,
    pub self_loops: u64,
    pub duplicates: u64,
}

impl LoadReport {
    pub fn dropped(&self) -> u64 {
        self.self_loops + self.duplicates
    }
}

/// Accumulates follow records before freezing them into a [`FollowNetwork`].
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    user_ids: Vec<UserId>,
    index: HashMap<UserId, Node>,
    edges: Vec<(Node, Node)>,
    report: LoadReport,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, id: UserId) -> Node {
        if let Some(&n) = self.index.get(&id) {
            return n;
        }
        let n = self.user_ids.len() as Node;
        self.user_ids.push(id);
        self.index.insert(id, n);
        n
    }

    /// Records that `follower` follows `followee`.
    pub fn add_follow(&mut self, follower: UserId, followee: UserId) {
        self.report.records += 1;
        let a = self.intern(follower);
        let b = self.intern(followee);
        if a == b {
            self.report.self_loops += 1;
            return;
        }
        self.edges.push((a, b));
    }

    pub fn build(mut self) -> (FollowNetwork, LoadReport) {
        let n = self.user_ids.len();
        self.edges.sort_unstable();
        let before = self.edges.len();
        self.edges.dedup();
        self.report.duplicates = (before - self.edges.len()) as u64;
        self.report.edges = self.edges.len() as u64;

        let (followee_offsets, followees) = csr_from_sorted(n, &self.edges);

        // Bucket by followee; since edges are sorted by follower, each bucket
        // fills in ascending follower order.
        let mut follower_offsets = vec![0usize; n + 1];
        for &(_, b) in &self.edges {
            follower_offsets[b as usize + 1] += 1;
        }
        for i in 0..n {
            follower_offsets[i + 1] += follower_offsets[i];
        }
        let mut cursor = follower_offsets.clone();
        let mut followers = vec![0 as Node; self.edges.len()];
        for &(a, b) in &self.edges {
            followers[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }

        let network = FollowNetwork {
            user_ids: self.user_ids,
            index: self.index,
            followee_offsets,
            followees,
            follower_offsets,
            followers,
        };
        (network, self.report)
    }
}

fn csr_from_sorted(n: usize, edges: &[(Node, Node)]) -> (Vec<usize>, Vec<Node>) {
    let mut offsets = vec![0usize; n + 1];
    for &(a, _) in edges {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, edges.iter().map(|&(_, b)| b).collect())
}

/// Builds a network from `(follower, followee)` pairs.
pub fn load_network<I>(edges: I) -> (FollowNetwork, LoadReport)
where
    I: IntoIterator<Item = (UserId, UserId)>,
{
    let mut builder = NetworkBuilder::new();
    for (follower, followee) in edges {
        builder.add_follow(follower, followee);
    }
    builder.build()
}

/// Immutable directed follow graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowNetwork {
    user_ids: Vec<UserId>,
    index: HashMap<UserId, Node>,
    followee_offsets: Vec<usize>,
    followees: Vec<Node>,
    follower_offsets: Vec<usize>,
    followers: Vec<Node>,
}

impl FollowNetwork {
    pub fn node_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.followees.len()
    }

    pub fn user_id(&self, u: Node) -> UserId {
        self.user_ids[u as usize]
    }

    pub fn user_ids(&self) -> &[UserId] {
        &self.user_ids
    }

    pub fn node(&self, id: UserId) -> Option<Node> {
        self.index.get(&id).copied()
    }

    /// Looks up `id`, appending it as an isolated node when unknown.
    /// Returns the node and whether it was added.
    pub fn intern_isolated(&mut self, id: UserId) -> (Node, bool) {
        if let Some(n) = self.node(id) {
            return (n, false);
        }
        let n = self.user_ids.len() as Node;
        self.user_ids.push(id);
        self.index.insert(id, n);
        self.followee_offsets.push(self.followees.len());
        self.follower_offsets.push(self.followers.len());
        (n, true)
    }

    fn check(&self, u: Node) -> Result<()> {
        if (u as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: u,
                node_count: self.node_count(),
            })
        }
    }

    /// Users that `u` follows, sorted ascending.
    pub fn followees(&self, u: Node) -> Result<&[Node]> {
        self.check(u)?;
        Ok(self.followees_of(u))
    }

    /// Users following `u`, sorted ascending.
    pub fn followers(&self, u: Node) -> Result<&[Node]> {
        self.check(u)?;
        Ok(self.followers_of(u))
    }

    #[inline]
    pub(crate) fn followees_of(&self, u: Node) -> &[Node] {
        let u = u as usize;
        &self.followees[self.followee_offsets[u]..self.followee_offsets[u + 1]]
    }

    #[inline]
    pub(crate) fn followers_of(&self, u: Node) -> &[Node] {
        let u = u as usize;
        &self.followers[self.follower_offsets[u]..self.follower_offsets[u + 1]]
    }

    /// True when `follower` follows `followee`.
    #[inline]
    pub fn follows(&self, follower: Node, followee: Node) -> bool {
        self.followees_of(follower).binary_search(&followee).is_ok()
    }

    /// Iterates `(follower, followee)` pairs in node order.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        (0..self.node_count() as Node)
            .flat_map(move |u| self.followees_of(u).iter().map(move |&v| (u, v)))
    }

    /// Writes the network as a tab-separated `follower<TAB>followee` list
    /// sorted by user id.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let mut pairs: Vec<(UserId, UserId)> = self
            .edges()
            .map(|(a, b)| (self.user_id(a), self.user_id(b)))
            .collect();
        pairs.sort_unstable();
        for (a, b) in pairs {
            writeln!(out, "{a}\t{b}")?;
        }
        Ok(())
    }

    /// Hop distances from `source` along follower links.
    pub fn influence_distance(&self, source: Node) -> Result<InfluenceDistances> {
        self.check(source)?;
        Ok(self.bfs(source, Direction::Followers))
    }

    /// Hop distances from `source` along followee links (reverse influence).
    pub(crate) fn reverse_distance(&self, source: Node) -> InfluenceDistances {
        self.bfs(source, Direction::Followees)
    }

    fn bfs(&self, source: Node, direction: Direction) -> InfluenceDistances {
        let n = self.node_count();
        let mut dist = vec![UNREACHED; n];
        let mut order = Vec::new();
        let mut layer_offsets = vec![0usize];
        dist[source as usize] = 0;
        order.push(source);
        let mut head = 0;
        let mut depth = 0u32;
        while head < order.len() {
            let layer_end = order.len();
            layer_offsets.push(layer_end);
            depth += 1;
            while head < layer_end {
                let u = order[head];
                head += 1;
                let next = match direction {
                    Direction::Followers => self.followers_of(u),
                    Direction::Followees => self.followees_of(u),
                };
                for &v in next {
                    if dist[v as usize] == UNREACHED {
                        dist[v as usize] = depth;
                        order.push(v);
                    }
                }
            }
        }
        InfluenceDistances {
            source,
            dist,
            order,
            layer_offsets,
        }
    }

    pub fn mutual_graph(&self) -> MutualGraph {
        let n = self.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        let mut neighbors = Vec::new();
        for u in 0..n as Node {
            let (mut a, mut b) = (self.followees_of(u).iter(), self.followers_of(u).iter());
            let (mut x, mut y) = (a.next(), b.next());
            while let (Some(&p), Some(&q)) = (x, y) {
                match p.cmp(&q) {
                    std::cmp::Ordering::Less => x = a.next(),
                    std::cmp::Ordering::Greater => y = b.next(),
                    std::cmp::Ordering::Equal => {
                        neighbors.push(p);
                        x = a.next();
                        y = b.next();
                    }
                }
            }
            offsets.push(neighbors.len());
        }
        MutualGraph { offsets, neighbors }
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Followers,
    Followees,
}

/// Result of a breadth-first search from one source.
///
/// Nodes are stored in visit order, which groups them by layer.
#[derive(Debug, Clone)]
pub struct InfluenceDistances {
    source: Node,
    dist: Vec<u32>,
    order: Vec<Node>,
    layer_offsets: Vec<usize>,
}

impl InfluenceDistances {
    pub fn source(&self) -> Node {
        self.source
    }

    /// Hop count from the source, `None` when unreachable.
    #[inline]
    pub fn get(&self, v: Node) -> Option<u32> {
        match self.dist[v as usize] {
            UNREACHED => None,
            d => Some(d),
        }
    }

    /// Largest finite distance.
    pub fn max_distance(&self) -> u32 {
        (self.layer_offsets.len() - 2) as u32
    }

    /// Nodes at exactly `d` hops.
    pub fn layer(&self, d: u32) -> &[Node] {
        let d = d as usize;
        if d + 1 >= self.layer_offsets.len() {
            return &[];
        }
        &self.order[self.layer_offsets[d]..self.layer_offsets[d + 1]]
    }

    /// Node counts per distance; index 0 is the source itself.
    pub fn layer_sizes(&self) -> Vec<u64> {
        self.layer_offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as u64)
            .collect()
    }

    pub fn reachable_count(&self) -> usize {
        self.order.len()
    }

    pub fn unreachable_count(&self) -> usize {
        self.dist.len() - self.order.len()
    }

    pub fn unreachable_nodes(&self) -> Vec<Node> {
        self.dist
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d == UNREACHED)
            .map(|(v, _)| v as Node)
            .collect()
    }

    /// A farthest node (last visited).
    pub(crate) fn farthest(&self) -> Node {
        *self.order.last().expect("source always visited")
    }
}

/// Undirected graph of reciprocated follow ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutualGraph {
    offsets: Vec<usize>,
    neighbors: Vec<Node>,
}

impl MutualGraph {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, u: Node) -> &[Node] {
        let u = u as usize;
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: Node) -> usize {
        self.neighbors(u).len()
    }

    /// Nodes at shortest-path distance exactly `d` from `u`.
    pub fn exact_distance_bucket(&self, u: Node, d: u32) -> Result<Vec<Node>> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "distance bucket requires d >= 1".into(),
            ));
        }
        if u as usize >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: u,
                node_count: self.node_count(),
            });
        }
        let mut scratch = BoundedBfs::new(self.node_count());
        let mut buckets = scratch.buckets(self, u, d);
        Ok(buckets.pop().unwrap_or_default())
    }
}

/// Reusable scratch space for depth-limited searches on a [`MutualGraph`].
#[derive(Debug)]
pub struct BoundedBfs {
    stamp: Vec<u32>,
    epoch: u32,
}

impl BoundedBfs {
    pub fn new(node_count: usize) -> Self {
        Self {
            stamp: vec![0; node_count],
            epoch: 0,
        }
    }

    /// Exact-distance buckets `1..=max_d` around `u`; element `i` holds
    /// distance `i + 1`. Trailing buckets may be empty.
    pub fn buckets(&mut self, graph: &MutualGraph, u: Node, max_d: u32) -> Vec<Vec<Node>> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.stamp[u as usize] = epoch;
        let mut out: Vec<Vec<Node>> = Vec::with_capacity(max_d as usize);
        let mut frontier = vec![u];
        for _ in 0..max_d {
            let mut next = Vec::new();
            for &x in &frontier {
                for &y in graph.neighbors(x) {
                    if self.stamp[y as usize] != epoch {
                        self.stamp[y as usize] = epoch;
                        next.push(y);
                    }
                }
            }
            next.sort_unstable();
            out.push(next.clone());
            frontier = next;
        }
        out
    }
}
