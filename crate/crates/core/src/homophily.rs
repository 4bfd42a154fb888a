//! Neighbor and exact-distance correlation of per-user metric values.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{BoundedBfs, FollowNetwork, MutualGraph, Node};
use crate::stats::{self, Correlation, PValueMethod};

/// Metric value per node; `None` outside the analysed population.
pub type Values = [Option<f64>];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Followees,
    Followers,
    Mutual,
}

impl Adjacency {
    pub const ALL: [Adjacency; 3] = [Adjacency::Followees, Adjacency::Followers, Adjacency::Mutual];

    pub fn name(self) -> &'static str {
        match self {
            Adjacency::Followees => "followees",
            Adjacency::Followers => "followers",
            Adjacency::Mutual => "mutual",
        }
    }
}

fn value(values: &Values, u: Node) -> Option<f64> {
    values.get(u as usize).copied().flatten()
}

fn mean_of(values: &Values, nodes: &[Node]) -> Option<(f64, usize)> {
    let mut s = stats::KahanSum::default();
    let mut k = 0;
    for &v in nodes {
        if let Some(x) = value(values, v) {
            s.add(x);
            k += 1;
        }
    }
    (k > 0).then(|| (s.value() / k as f64, k))
}

/// `(own value, mean over neighbors in the population)` for every
/// population member with at least one such neighbor, in node order.
pub fn neighbor_average_pairs(
    values: &Values,
    network: &FollowNetwork,
    mutual: &MutualGraph,
    kind: Adjacency,
) -> Vec<(f64, f64)> {
    (0..values.len() as Node)
        .into_par_iter()
        .filter_map(|u| {
            let own = value(values, u)?;
            let nb = match kind {
                Adjacency::Followees => network.followees_of(u),
                Adjacency::Followers => network.followers_of(u),
                Adjacency::Mutual => mutual.neighbors(u),
            };
            mean_of(values, nb).map(|(m, _)| (own, m))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistancePairs {
    pub distance: u32,
    pub pairs: Vec<(f64, f64)>,
    /// Mean over population members of the share of other members at this
    /// exact distance.
    pub share: f64,
}

/// Exact-distance pairs for every `d` in `1..=max_d` on the mutual graph.
pub fn distance_average_pairs_upto(values: &Values, mutual: &MutualGraph, max_d: u32) -> Vec<DistancePairs> {
    let population: Vec<Node> = (0..values.len() as Node)
        .filter(|&u| value(values, u).is_some())
        .collect();
    let others = population.len().saturating_sub(1);
    // per member: (own value, per-distance (mean, members at distance))
    let per_user: Vec<(f64, Vec<Option<(f64, usize)>>)> = population
        .par_iter()
        .map_init(
            || BoundedBfs::new(mutual.node_count()),
            |bfs, &u| {
                let own = value(values, u).expect("population member");
                let buckets = if (u as usize) < mutual.node_count() {
                    bfs.buckets(mutual, u, max_d)
                } else {
                    vec![Vec::new(); max_d as usize]
                };
                (own, buckets.iter().map(|b| mean_of(values, b)).collect())
            },
        )
        .collect();
    (1..=max_d)
        .map(|d| {
            let idx = (d - 1) as usize;
            let pairs = per_user
                .iter()
                .filter_map(|(own, rows)| rows[idx].map(|(m, _)| (*own, m)))
                .collect();
            let share = if others == 0 {
                0.0
            } else {
                let shares: Vec<f64> = per_user
                    .iter()
                    .map(|(_, rows)| rows[idx].map_or(0.0, |(_, k)| k as f64 / others as f64))
                    .collect();
                stats::mean(&shares)
            };
            DistancePairs {
                distance: d,
                pairs,
                share,
            }
        })
        .collect()
}

pub fn distance_average_pairs(values: &Values, mutual: &MutualGraph, d: u32) -> Result<DistancePairs> {
    if d == 0 {
        return Err(crate::Error::InvalidArgument("distance must be at least 1".into()));
    }
    Ok(distance_average_pairs_upto(values, mutual, d)
        .pop()
        .expect("one entry per distance"))
}

pub fn spearman_with_p(pairs: &[(f64, f64)], method: PValueMethod) -> Result<Correlation> {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    stats::spearman_with(&x, &y, method)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub metric: String,
    /// `adjacency` or `distance`.
    pub mode: &'static str,
    /// Adjacency kind or distance.
    pub key: String,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
    pub share: Option<f64>,
}

fn row(metric: &str, mode: &'static str, key: String, pairs: &[(f64, f64)], share: Option<f64>, method: PValueMethod) -> CorrelationRow {
    let corr = spearman_with_p(pairs, method).ok();
    CorrelationRow {
        metric: metric.to_string(),
        mode,
        key,
        rho: corr.map(|c| c.rho),
        p: corr.map(|c| c.p_value),
        n: pairs.len(),
        share,
    }
}

/// Adjacency rows for all three kinds followed by distance rows `1..=max_d`.
pub fn correlation_rows(
    metric: &str,
    values: &Values,
    network: &FollowNetwork,
    mutual: &MutualGraph,
    max_d: u32,
    method: PValueMethod,
) -> Vec<CorrelationRow> {
    let mut rows: Vec<CorrelationRow> = Adjacency::ALL
        .iter()
        .map(|&k| {
            let pairs = neighbor_average_pairs(values, network, mutual, k);
            row(metric, "adjacency", k.name().to_string(), &pairs, None, method)
        })
        .collect();
    for dp in distance_average_pairs_upto(values, mutual, max_d) {
        rows.push(row(metric, "distance", dp.distance.to_string(), &dp.pairs, Some(dp.share), method));
    }
    rows
}
