//! Repost Contribution Index.
//!
//! Each repost `v` that has earlier followee reposts `B(v)` hands a credit of
//! `(1 + RCI(v)) / |B(v)|` to every member of `B(v)`. Credits only flow
//! backwards in time, so a single pass from the latest repost to the
//! earliest settles every value.

use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{DiffusionGraph, LinkType, TweetId};
use crate::error::{Error, Result};
use crate::graph::{FollowNetwork, UserId};
use crate::stats::{self, Histogram, KahanSum};

/// Per-repost RCI values, indexed like the cascade's reposts.
pub fn compute_rci(graph: &DiffusionGraph) -> Vec<f64> {
    let n = graph.repost_count();
    let mut rci = vec![0.0; n];
    for v in (0..n).rev() {
        let b = graph.b_size(v);
        if b == 0 {
            continue;
        }
        let share = (1.0 + rci[v]) / b as f64;
        for w in graph.predecessor_set_b(v) {
            rci[w] += share;
        }
    }
    rci
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RciRow {
    pub user_id: UserId,
    pub rci: f64,
    pub b_size: usize,
    pub label: LinkType,
    pub distance: Option<u32>,
    /// Seconds since the cascade's first repost.
    pub offset_s: i64,
}

impl RciRow {
    pub fn disconnected(&self) -> bool {
        self.distance.is_none()
    }

    pub fn explicit(&self) -> bool {
        self.label == LinkType::Explicit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RciTable {
    pub cascade_id: TweetId,
    pub rows: Vec<RciRow>,
}

pub fn rci_table(graph: &DiffusionGraph, network: &FollowNetwork) -> RciTable {
    let values = compute_rci(graph);
    let first = (graph.repost_count() > 0).then(|| graph.repost_time(0));
    let rows = values
        .into_iter()
        .enumerate()
        .map(|(i, rci)| RciRow {
            user_id: network.user_id(graph.reposter(i)),
            rci,
            b_size: graph.b_size(i),
            label: graph.label(i),
            distance: graph.source_distance(i),
            offset_s: graph.repost_time(i) - first.unwrap_or_default(),
        })
        .collect();
    RciTable {
        cascade_id: graph.tweet_id(),
        rows,
    }
}

pub fn rci_tables(graphs: &[DiffusionGraph], network: &FollowNetwork) -> Vec<RciTable> {
    graphs.par_iter().map(|g| rci_table(g, network)).collect()
}

/// Residual of the mass balance: total RCI held by reposts with empty `B`
/// minus the number of reposts with non-empty `B`.
pub fn conservation_residual(table: &RciTable) -> f64 {
    let mut roots = KahanSum::default();
    let mut referencing = 0usize;
    for r in &table.rows {
        if r.b_size == 0 {
            roots.add(r.rci);
        } else {
            referencing += 1;
        }
    }
    roots.value() - referencing as f64
}

pub const CONSERVATION_TOL: f64 = 1e-9;

pub fn rci_conservation_check(table: &RciTable) -> Result<()> {
    let residual = conservation_residual(table);
    if residual.abs() <= CONSERVATION_TOL {
        Ok(())
    } else {
        Err(Error::Conservation {
            cascade_id: table.cascade_id,
            residual,
        })
    }
}

/// A zero bin `[0, 1e-12)` followed by decade bins from `1e-3` up to `1e6`.
pub fn default_rci_edges() -> Vec<f64> {
    let mut edges = vec![0.0, 1e-12];
    edges.extend((-3..=6).map(|k| 10f64.powi(k)));
    edges
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RciDistribution {
    pub explicit: Histogram,
    pub implicit: Histogram,
}

pub fn rci_distribution(tables: &[RciTable], edges: &[f64]) -> Result<RciDistribution> {
    let mut explicit = Histogram::new(edges.to_vec())?;
    let mut implicit = Histogram::new(edges.to_vec())?;
    for row in tables.iter().flat_map(|t| &t.rows) {
        match row.label {
            LinkType::Explicit => explicit.add(row.rci),
            LinkType::Implicit => implicit.add(row.rci),
        }
    }
    Ok(RciDistribution { explicit, implicit })
}

/// Regressors in report order.
pub const COVARIATES: [&str; 4] = ["distance", "disconnected", "offset_s", "explicit"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RciRegression {
    /// Standardized coefficients in [`COVARIATES`] order; `None` for a
    /// constant column that was left out of the fit.
    pub coefficients: Vec<Option<f64>>,
    pub hc3_se: Vec<Option<f64>>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    /// Distance value substituted for unreachable reposts.
    pub distance_placeholder: f64,
    pub warnings: Vec<String>,
}

impl RciRegression {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let j = COVARIATES.iter().position(|c| *c == name)?;
        self.coefficients[j]
    }
}

/// Pooled regression of standardized RCI on standardized covariates,
/// fitted without intercept.
pub fn rci_regression(tables: &[RciTable]) -> Result<RciRegression> {
    let rows: Vec<&RciRow> = tables.iter().flat_map(|t| &t.rows).collect();
    let max_finite = rows.iter().filter_map(|r| r.distance).max().unwrap_or(0);
    let placeholder = max_finite as f64 + 1.0;

    let raw: [Vec<f64>; 4] = [
        rows.iter()
            .map(|r| r.distance.map_or(placeholder, f64::from))
            .collect(),
        rows.iter().map(|r| f64::from(u8::from(r.disconnected()))).collect(),
        rows.iter().map(|r| r.offset_s as f64).collect(),
        rows.iter().map(|r| f64::from(u8::from(r.explicit()))).collect(),
    ];
    let y: Vec<f64> = rows.iter().map(|r| r.rci).collect();
    regress_standardized(&y, &raw, placeholder)
}

pub(crate) fn regress_standardized(
    y: &[f64],
    raw: &[Vec<f64>; 4],
    placeholder: f64,
) -> Result<RciRegression> {
    let n = y.len();
    if n < COVARIATES.len() + 2 {
        return Err(Error::Precondition(format!(
            "RCI regression needs at least {} rows, got {n}",
            COVARIATES.len() + 2
        )));
    }
    let y = stats::zstandardize_named(y, "rci")?;
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    let mut columns = Vec::new();
    for (j, col) in raw.iter().enumerate() {
        match stats::zstandardize_named(col, COVARIATES[j]) {
            Ok(z) => {
                kept.push(j);
                columns.push(z);
            }
            Err(Error::ConstantColumn(name)) => {
                let msg = format!("column `{name}` is constant; coefficient undefined");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    if columns.is_empty() {
        return Err(Error::Precondition(
            "every RCI covariate is constant".into(),
        ));
    }
    let fit = stats::ols_hc3(&columns, &y)?;
    let mut coefficients = vec![None; COVARIATES.len()];
    let mut hc3_se = vec![None; COVARIATES.len()];
    for (k, &j) in kept.iter().enumerate() {
        coefficients[j] = Some(fit.coefficients[k]);
        hc3_se[j] = Some(fit.hc3_se[k]);
    }
    Ok(RciRegression {
        coefficients,
        hc3_se,
        r_squared: fit.r_squared,
        adjusted_r_squared: fit.adjusted_r_squared,
        n,
        distance_placeholder: placeholder,
        warnings,
    })
}
