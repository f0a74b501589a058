//! Two-sample distances, rate regression and the Monte-Carlo harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;

/// Sample sizes below this make the asymptotic p-value unreliable.
pub const SMALL_SAMPLE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// Set when either sample is smaller than [`SMALL_SAMPLE`].
    pub small_sample: bool,
}

fn finite_sorted(xs: &[f64], name: &str) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return invalid(format!("sample {name} is empty"));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return invalid(format!("sample {name} contains NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Kolmogorov–Smirnov two-sample test: exact sup-distance between the
/// empirical CDFs and the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TwoSampleResult> {
    let a = finite_sorted(a, "a")?;
    let b = finite_sorted(b, "b")?;
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TwoSampleResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n1,
        n2,
        small_sample: n1.min(n2) < SMALL_SAMPLE,
    })
}

/// `P(K > lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `max_u |phi_a(u) - phi_b(u)|` over `grid`, with `phi` the empirical
/// characteristic function.
pub fn ecf_distance(a: &[f64], b: &[f64], grid: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() || grid.is_empty() {
        return invalid("ecf_distance needs nonempty samples and grid");
    }
    let ecf = |xs: &[f64], u: f64| {
        let (c, s) = xs.iter().fold((0.0, 0.0), |(c, s), x| (c + (u * x).cos(), s + (u * x).sin()));
        (c / xs.len() as f64, s / xs.len() as f64)
    };
    Ok(grid
        .iter()
        .map(|&u| {
            let (ca, sa) = ecf(a, u);
            let (cb, sb) = ecf(b, u);
            (ca - cb).hypot(sa - sb)
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log2(value)` per unit of `n`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log2(values)` on `ns`.
pub fn fit_rate(ns: &[f64], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return invalid(format!("{} levels but {} values", ns.len(), values.len()));
    }
    if ns.len() < 3 {
        return invalid("rate fit needs at least 3 points");
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return invalid(format!("rate fit needs positive finite values, got {v}"));
    }
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let m = ns.len() as f64;
    let xbar = ns.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = ns.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("rate fit needs at least two distinct levels");
    }
    let sxy: f64 = ns.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let syy: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let sse: f64 = ns.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(RateFit { slope, intercept, r_squared })
}

/// Mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let count = xs.len();
    if count == 0 {
        return Summary { mean: f64::NAN, variance: f64::NAN, stderr: f64::NAN, count };
    }
    let n = count as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = if count > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Summary { mean, variance, stderr: (variance / n).sqrt(), count }
}

/// Run `estimator(index, seed)` for `replications` replications, the seed of
/// replication `i` being `derive_seed(master_seed, i)`.
///
/// Results are returned in replication order and do not depend on `workers`
/// (`None` uses rayon's global pool, `Some(1)` runs serially).
pub fn mc_run<T, F>(replications: usize, master_seed: u64, workers: Option<usize>, estimator: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    if replications == 0 {
        return invalid("replications must be at least 1");
    }
    let job = |i: usize| estimator(i, derive_seed(master_seed, i as u64));
    match workers {
        Some(0) => invalid("workers must be at least 1"),
        Some(1) => (0..replications).map(job).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(|| (0..replications).into_par_iter().map(job).collect()),
        None => (0..replications).into_par_iter().map(job).collect(),
    }
}
