//! Per-user adoption metrics: IAR, SAR and RER, plus population filters.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::DiffusionGraph;
use crate::graph::{FollowNetwork, MutualGraph, Node};

/// Per-user counts indexed by node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserCounts {
    pub adopted: Vec<u32>,
    pub exposed: Vec<u32>,
    pub adopted_exposed: Vec<u32>,
    pub received: Vec<u32>,
    pub received_explicit: Vec<u32>,
}

impl UserCounts {
    fn zeros(n: usize) -> Self {
        UserCounts {
            adopted: vec![0; n],
            exposed: vec![0; n],
            adopted_exposed: vec![0; n],
            received: vec![0; n],
            received_explicit: vec![0; n],
        }
    }

    fn merge(mut self, other: UserCounts) -> Self {
        for (a, b) in [
            (&mut self.adopted, &other.adopted),
            (&mut self.exposed, &other.exposed),
            (&mut self.adopted_exposed, &other.adopted_exposed),
            (&mut self.received, &other.received),
            (&mut self.received_explicit, &other.received_explicit),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }

    pub fn node_count(&self) -> usize {
        self.adopted.len()
    }

    /// Influence-driven adoption rate: adopted-and-exposed over exposed.
    pub fn iar(&self, u: Node) -> Option<f64> {
        let u = u as usize;
        (self.exposed[u] > 0).then(|| self.adopted_exposed[u] as f64 / self.exposed[u] as f64)
    }

    /// Spontaneous adoption rate: share of adoptions without earlier
    /// followee activity.
    pub fn sar(&self, u: Node) -> Option<f64> {
        let u = u as usize;
        let a = self.adopted[u];
        (a > 0).then(|| (a - self.adopted_exposed[u]) as f64 / a as f64)
    }

    /// Share of reposts received by `u` that arrived via explicit links.
    pub fn rer(&self, u: Node) -> Option<f64> {
        let u = u as usize;
        let r = self.received[u];
        (r > 0).then(|| self.received_explicit[u] as f64 / r as f64)
    }

    pub fn is_active(&self, u: Node) -> bool {
        let u = u as usize;
        self.adopted[u] > 0 || self.exposed[u] > 0 || self.received[u] > 0
    }
}

fn cascade_counts(
    graphs: &[DiffusionGraph],
    network: &FollowNetwork,
    acc: &mut UserCounts,
    scratch: &mut Vec<Node>,
) {
    for g in graphs {
        let author = g.author() as usize;
        acc.received[author] += g.repost_count() as u32;
        scratch.clear();
        scratch.extend_from_slice(network.followers_of(g.author()));
        for i in 0..g.repost_count() {
            let u = g.reposter(i);
            acc.adopted[u as usize] += 1;
            if g.is_explicit(i) {
                acc.adopted_exposed[u as usize] += 1;
                acc.received_explicit[author] += 1;
            }
            scratch.extend_from_slice(network.followers_of(u));
        }
        scratch.sort_unstable();
        scratch.dedup();
        for &v in scratch.iter() {
            acc.exposed[v as usize] += 1;
        }
    }
}

/// Counts adoptions, exposures and received reposts over all cascades.
/// A tweet is in a user's exposed set when any followee posted or
/// reposted it.
pub fn exposure_adoption_counts(graphs: &[DiffusionGraph], network: &FollowNetwork) -> UserCounts {
    let n = network.node_count();
    let chunk = (graphs.len() / (4 * rayon::current_num_threads()).max(1)).max(64);
    graphs
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = UserCounts::zeros(n);
            let mut scratch = Vec::new();
            cascade_counts(part, network, &mut acc, &mut scratch);
            acc
        })
        .reduce(|| UserCounts::zeros(n), UserCounts::merge)
}

/// Share of all reposts carrying an explicit label.
pub fn explicit_ratio(graphs: &[DiffusionGraph]) -> Option<f64> {
    let total: usize = graphs.iter().map(|g| g.repost_count()).sum();
    let explicit: usize = graphs.iter().map(|g| g.explicit_count()).sum();
    (total > 0).then(|| explicit as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Populations {
    pub min_events: u32,
    pub require_mutual: bool,
    /// Users entering IAR and SAR analyses.
    pub adopters: Vec<Node>,
    /// Users entering RER analyses.
    pub receivers: Vec<Node>,
    pub funnel: Funnel,
}

/// Population sizes before and after the mutual-link requirement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Funnel {
    pub pass_repost: usize,
    pub pass_repost_mutual: usize,
    pub pass_received: usize,
    pub pass_received_mutual: usize,
}

pub fn passes_repost(counts: &UserCounts, u: Node, min_events: u32) -> bool {
    counts.adopted[u as usize] >= min_events
}

pub fn passes_received(counts: &UserCounts, u: Node, min_events: u32) -> bool {
    counts.received[u as usize] >= min_events
}

pub fn apply_filters(
    counts: &UserCounts,
    mutual: &MutualGraph,
    min_events: u32,
    require_mutual: bool,
) -> Populations {
    let n = counts.node_count() as Node;
    let has_mutual = |u: Node| (u as usize) < mutual.node_count() && mutual.degree(u) > 0;
    let repost: Vec<Node> = (0..n).filter(|&u| passes_repost(counts, u, min_events)).collect();
    let received: Vec<Node> = (0..n).filter(|&u| passes_received(counts, u, min_events)).collect();
    let funnel = Funnel {
        pass_repost: repost.len(),
        pass_repost_mutual: repost.iter().filter(|&&u| has_mutual(u)).count(),
        pass_received: received.len(),
        pass_received_mutual: received.iter().filter(|&&u| has_mutual(u)).count(),
    };
    let keep = |v: Vec<Node>| -> Vec<Node> {
        if require_mutual {
            v.into_iter().filter(|&u| has_mutual(u)).collect()
        } else {
            v
        }
    };
    Populations {
        min_events,
        require_mutual,
        adopters: keep(repost),
        receivers: keep(received),
        funnel,
    }
}
