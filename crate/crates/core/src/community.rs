//! Louvain community detection on the undirected projection of the follow
//! network, plus intra-community diffusion ratios.
//!
//! The projection gives each directed follow weight 1, so a reciprocated
//! pair carries weight 2. Modularity uses the usual
//! `Q = Σ_c [ Σ_in(c) / 2m − γ (Σ_tot(c) / 2m)² ]` with `Σ_in` counting every
//! internal edge from both ends.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{DiffusionGraph, LinkType};
use crate::graph::{FollowNetwork, Node};

/// Community assignment for every node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    community: Vec<u32>,
    count: usize,
    pub modularity: f64,
    /// Modularity before the first pass and after each pass.
    pub history: Vec<f64>,
}

impl Partition {
    /// Builds a partition from raw labels, renumbering them densely in
    /// order of first appearance.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let community: Vec<u32> = labels
            .iter()
            .map(|l| {
                let next = remap.len() as u32;
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            count: remap.len(),
            community,
            modularity: f64::NAN,
            history: Vec::new(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n as u32).collect::<Vec<_>>())
    }

    #[inline]
    pub fn community(&self, u: Node) -> u32 {
        self.community[u as usize]
    }

    pub fn labels(&self) -> &[u32] {
        &self.community
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn node_count(&self) -> usize {
        self.community.len()
    }

    /// Extends the partition with singleton communities for nodes added
    /// to the network after detection.
    pub fn cover(&mut self, node_count: usize) {
        while self.community.len() < node_count {
            self.community.push(self.count as u32);
            self.count += 1;
        }
    }

    pub fn with_modularity(mut self, network: &FollowNetwork, resolution: f64) -> Self {
        self.modularity = modularity(network, &self, resolution);
        self
    }
}

/// Weighted undirected graph in CSR form. Self-loop entries appear once in
/// their row and count once toward the node's degree.
#[derive(Debug, Clone)]
struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl WeightedGraph {
    fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut degree = Vec::with_capacity(rows.len());
        for row in rows {
            degree.push(row.iter().map(|e| e.1).sum());
            for (t, w) in row {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let total = degree.iter().sum();
        WeightedGraph {
            offsets,
            targets,
            weights,
            degree,
            total,
        }
    }

    fn projection(network: &FollowNetwork) -> Self {
        let n = network.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(2 * network.edge_count());
        let mut weights = Vec::with_capacity(2 * network.edge_count());
        let mut degree = Vec::with_capacity(n);
        for u in 0..n as Node {
            let out = network.followees_of(u);
            let inn = network.followers_of(u);
            let (mut i, mut j) = (0, 0);
            while i < out.len() || j < inn.len() {
                let (t, w) = match (out.get(i), inn.get(j)) {
                    (Some(&a), Some(&b)) if a == b => {
                        i += 1;
                        j += 1;
                        (a, 2.0)
                    }
                    (Some(&a), Some(&b)) if a < b => {
                        i += 1;
                        (a, 1.0)
                    }
                    (Some(_), Some(&b)) => {
                        j += 1;
                        (b, 1.0)
                    }
                    (Some(&a), None) => {
                        i += 1;
                        (a, 1.0)
                    }
                    (None, Some(&b)) => {
                        j += 1;
                        (b, 1.0)
                    }
                    (None, None) => unreachable!(),
                };
                targets.push(t);
                weights.push(w);
            }
            degree.push((out.len() + inn.len()) as f64);
            offsets.push(targets.len());
        }
        let total = degree.iter().sum();
        WeightedGraph {
            offsets,
            targets,
            weights,
            degree,
            total,
        }
    }

    fn modularity(&self, community: &[u32], resolution: f64) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = community.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut internal = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for u in 0..self.node_count() {
            let cu = community[u] as usize;
            tot[cu] += self.degree[u];
            for (v, w) in self.row(u) {
                if community[v] as usize == cu {
                    internal[cu] += w;
                }
            }
        }
        let m2 = self.total;
        internal
            .iter()
            .zip(&tot)
            .map(|(i, t)| i / m2 - resolution * (t / m2) * (t / m2))
            .sum()
    }

    /// Local moving phase. Returns dense labels and whether any node moved.
    fn local_moves(&self, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<u32>, bool) {
        let n = self.node_count();
        let mut community: Vec<u32> = (0..n as u32).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut link = vec![f64::NAN; n];
        let mut touched: Vec<usize> = Vec::new();
        let m2 = self.total;
        let mut any = false;
        if m2 == 0.0 {
            return (community, false);
        }
        const MAX_SWEEPS: usize = 1000;
        for _ in 0..MAX_SWEEPS {
            let mut moved = false;
            for &u in &order {
                let cu = community[u] as usize;
                let ku = self.degree[u];
                for (v, w) in self.row(u) {
                    if v == u {
                        continue;
                    }
                    let c = community[v] as usize;
                    if link[c].is_nan() {
                        link[c] = 0.0;
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[cu] -= ku;
                let own = if link[cu].is_nan() { 0.0 } else { link[cu] };
                let mut best = cu;
                let mut best_gain = own - resolution * tot[cu] * ku / m2;
                for &c in &touched {
                    let gain = link[c] - resolution * tot[c] * ku / m2;
                    if gain > best_gain + 1e-12 {
                        best = c;
                        best_gain = gain;
                    }
                }
                tot[best] += ku;
                if best != cu {
                    community[u] = best as u32;
                    moved = true;
                    any = true;
                }
                for &c in &touched {
                    link[c] = f64::NAN;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        (Partition::from_labels(&community).community, any)
    }

    fn aggregate(&self, community: &[u32]) -> WeightedGraph {
        let k = community.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (u, &c) in community.iter().enumerate() {
            members[c as usize].push(u);
        }
        let mut acc = vec![0.0; k];
        let mut seen = vec![false; k];
        let mut rows = Vec::with_capacity(k);
        for group in &members {
            let mut touched = Vec::new();
            for &u in group {
                for (v, w) in self.row(u) {
                    let c = community[v] as usize;
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += w;
                }
            }
            touched.sort_unstable();
            rows.push(touched.iter().map(|&c| (c as u32, acc[c])).collect());
            for &c in &touched {
                acc[c] = 0.0;
                seen[c] = false;
            }
        }
        WeightedGraph::from_rows(rows)
    }
}

/// Modularity of `partition` on the undirected projection of `network`.
pub fn modularity(network: &FollowNetwork, partition: &Partition, resolution: f64) -> f64 {
    WeightedGraph::projection(network).modularity(partition.labels(), resolution)
}

/// Two-phase Louvain: local moving in seeded random order, then
/// aggregation, repeated until a pass moves nothing.
pub fn louvain(network: &FollowNetwork, resolution: f64, seed: u64) -> Partition {
    let base = WeightedGraph::projection(network);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.node_count();
    let mut assignment: Vec<u32> = (0..n as u32).collect();
    let mut history = vec![base.modularity(&assignment, resolution)];
    let mut level = base;
    loop {
        let (local, improved) = level.local_moves(resolution, &mut rng);
        if !improved {
            break;
        }
        for a in assignment.iter_mut() {
            *a = local[*a as usize];
        }
        let next = level.aggregate(&local);
        let q = next.modularity(&(0..next.node_count() as u32).collect::<Vec<_>>(), resolution);
        history.push(q);
        level = next;
    }
    let mut partition = Partition::from_labels(&assignment);
    partition.modularity = *history.last().expect("history starts non-empty");
    partition.history = history;
    partition
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RatioCount {
    pub same: u64,
    pub total: u64,
}

impl RatioCount {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.same as f64 / self.total as f64)
    }

    pub fn merge(self, other: RatioCount) -> Self {
        RatioCount {
            same: self.same + other.same,
            total: self.total + other.total,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IntraRatios {
    pub explicit: RatioCount,
    pub implicit: RatioCount,
}

impl IntraRatios {
    pub fn get(&self, link: LinkType) -> &RatioCount {
        match link {
            LinkType::Explicit => &self.explicit,
            LinkType::Implicit => &self.implicit,
        }
    }

    pub fn merge(self, other: IntraRatios) -> Self {
        IntraRatios {
            explicit: self.explicit.merge(other.explicit),
            implicit: self.implicit.merge(other.implicit),
        }
    }

    pub(crate) fn record(&mut self, link: LinkType, same: bool) {
        let slot = match link {
            LinkType::Explicit => &mut self.explicit,
            LinkType::Implicit => &mut self.implicit,
        };
        slot.total += 1;
        slot.same += same as u64;
    }
}

pub fn cascade_intra_counts(graph: &DiffusionGraph, partition: &Partition) -> IntraRatios {
    let home = partition.community(graph.author());
    let mut out = IntraRatios::default();
    for i in 0..graph.repost_count() {
        out.record(graph.label(i), partition.community(graph.reposter(i)) == home);
    }
    out
}

/// Share of reposts whose reposter sits in the author's community, per link type.
pub fn intra_community_ratio(graphs: &[DiffusionGraph], partition: &Partition) -> IntraRatios {
    graphs
        .par_iter()
        .map(|g| cascade_intra_counts(g, partition))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(IntraRatios::default(), IntraRatios::merge)
}
