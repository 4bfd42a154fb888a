//! Numeric kernel: standardization, rank correlation, OLS with HC3 errors,
//! histograms.
//!
//! Sums over observations use Neumaier compensation so that results do not
//! drift with row count or row order.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator), two-pass.
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    (sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() as f64 - 1.0)).sqrt()
}

/// Affine transform to mean 0 and sample standard deviation 1.
pub fn zstandardize(values: &[f64]) -> Result<Vec<f64>> {
    zstandardize_named(values, "values")
}

pub(crate) fn zstandardize_named(values: &[f64], name: &str) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "standardizing `{name}` needs at least 2 values"
        )));
    }
    let m = mean(values);
    let sd = sample_sd(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::ConstantColumn(name.to_string()));
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation; `None` when either margin is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PValueMethod {
    /// Two-sided Student-t approximation with n - 2 degrees of freedom.
    TApprox,
    /// Seeded permutation test.
    Permutation { permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Spearman rank correlation with the t-approximation p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    spearman_with(x, y, PValueMethod::TApprox)
}

pub fn spearman_with(x: &[f64], y: &[f64], method: PValueMethod) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "spearman: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "spearman needs at least 3 pairs, got {n}"
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry).ok_or_else(|| {
        Error::Precondition("spearman: constant margin, correlation undefined".into())
    })?;
    let p_value = match method {
        PValueMethod::TApprox => t_approx_p(rho, n),
        PValueMethod::Permutation { permutations, seed } => {
            permutation_p(&rx, &ry, rho, permutations, seed)
        }
    };
    Ok(Correlation { rho, p_value, n })
}

fn t_approx_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

fn permutation_p(rx: &[f64], ry: &[f64], rho: f64, permutations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = ry.to_vec();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        let r = pearson(rx, &shuffled).unwrap_or(0.0);
        if r.abs() >= rho.abs() - 1e-12 {
            extreme += 1;
        }
    }
    (extreme + 1) as f64 / (permutations + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub hc3_se: Vec<f64>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    pub p: usize,
    /// Rows with leverage 1, left out of the HC3 sum.
    pub saturated_rows: usize,
    pub residuals: Vec<f64>,
}

/// Relative singular-value cutoff below which a design counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares without intercept, with HC3 robust standard errors.
///
/// `columns` holds the regressors column-wise, each of length `y.len()`.
/// The fit goes through a thin QR factorization `X = QR`: leverages are the
/// squared row norms of `Q`, and the HC3 sandwich is
/// `R⁻¹ (Σ ωᵢ qᵢqᵢᵀ) R⁻ᵀ` with `ωᵢ = eᵢ² / (1 − hᵢᵢ)²`.
pub fn ols_hc3(columns: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult> {
    let n = y.len();
    let p = columns.len();
    if p == 0 {
        return Err(Error::InvalidArgument("ols: no regressors".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "ols: column length {} does not match response length {n}",
            c.len()
        )));
    }
    if n < p + 2 {
        return Err(Error::Precondition(format!(
            "ols: {n} rows is too few for {p} regressors"
        )));
    }

    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();

    let sv = r.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient {
            smallest_singular_value: smin,
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        });
    }

    let qty = DVector::from_fn(p, |j, _| sum((0..n).map(|i| q[(i, j)] * y[i])));
    let beta = r
        .solve_upper_triangular(&qty)
        .expect("R is nonsingular after the rank check");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("R is nonsingular after the rank check");

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| yv[i] - fitted[i]).collect();

    let mut meat = vec![KahanSum::default(); p * p];
    let mut saturated = 0usize;
    for i in 0..n {
        let h = sum((0..p).map(|j| q[(i, j)] * q[(i, j)]));
        if h >= 1.0 - 1e-10 {
            saturated += 1;
            continue;
        }
        let w = residuals[i] * residuals[i] / ((1.0 - h) * (1.0 - h));
        for a in 0..p {
            for b in a..p {
                meat[a * p + b].add(w * q[(i, a)] * q[(i, b)]);
            }
        }
    }
    if saturated > 0 {
        log::warn!("ols: {saturated} rows with leverage 1 excluded from HC3");
    }
    let meat = DMatrix::from_fn(p, p, |a, b| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        meat[a * p + b].value()
    });
    let cov = &r_inv * meat * r_inv.transpose();
    let hc3_se = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();

    let ssr = sum(residuals.iter().map(|e| e * e));
    let ybar = mean(y);
    let sst = sum(y.iter().map(|v| (v - ybar) * (v - ybar)));
    if !(sst > 0.0) {
        return Err(Error::ConstantColumn("response".into()));
    }
    let r_squared = 1.0 - ssr / sst;
    let adjusted_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0);

    Ok(RegressionResult {
        coefficients: beta.iter().copied().collect(),
        hc3_se,
        r_squared,
        adjusted_r_squared,
        n,
        p,
        saturated_rows: saturated,
        residuals,
    })
}

/// Counts over half-open bins `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidArgument(
                "histogram needs at least two edges".into(),
            ));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "histogram edges must be strictly increasing".into(),
            ));
        }
        let bins = edges.len() - 1;
        Ok(Histogram {
            edges,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn add(&mut self, v: f64) {
        let k = self.edges.partition_point(|&e| e <= v);
        if k == 0 || v.is_nan() {
            self.underflow += 1;
        } else if k == self.edges.len() {
            self.overflow += 1;
        } else {
            self.counts[k - 1] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    let mut h = Histogram::new(edges.to_vec())?;
    for &v in values {
        h.add(v);
    }
    Ok(h)
}
