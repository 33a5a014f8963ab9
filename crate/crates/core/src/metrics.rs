//! Sampling diagnostics and approximation-quality metrics.

use std::f64::consts::{LN_2, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::tree::DomainBounds;

/// Default KDE bandwidth for the `[-1, 1]^K` benchmark domain.
pub const DEFAULT_KDE_BANDWIDTH: f64 = 0.05;

/// Importance-sampling ESS, `1 / Σ w̄_i²` with `w̄` the normalized weights.
pub fn ess_is(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let sq: f64 = weights.iter().map(|w| (w / total) * (w / total)).sum();
    Ok(1.0 / sq)
}

/// ESS divided by the number of weights.
pub fn ness_is(weights: &[f64]) -> Result<f64> {
    Ok(ess_is(weights)? / weights.len() as f64)
}

/// Sample autocorrelation of `series` at `lag` (biased estimator, divisor N).
fn autocorrelation(centered: &[f64], variance: f64, lag: usize) -> f64 {
    let n = centered.len();
    let cov: f64 = centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64;
    cov / variance
}

fn ess_1d(series: &[f64], dim: usize) -> Result<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let variance = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(variance > 0.0) {
        return Err(Error::ConstantChain(dim));
    }
    // Geyer initial positive sequence: sum pairs ρ(2k) + ρ(2k+1) until the
    // first non-positive pair.
    let mut pair_sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let gamma = autocorrelation(&centered, variance, 2 * k) + autocorrelation(&centered, variance, 2 * k + 1);
        if gamma <= 0.0 {
            break;
        }
        pair_sum += gamma;
        k += 1;
    }
    // τ = 1 + 2 Σ_{t≥1} ρ(t) = -1 + 2 Σ_k Γ_k
    let tau = -1.0 + 2.0 * pair_sum;
    let ess = if tau > 0.0 { n as f64 / tau } else { n as f64 };
    Ok(ess.clamp(1.0, n as f64))
}

/// MCMC effective sample size `N / (1 + 2 Σ ρ(t))`, with the autocorrelation
/// sum truncated by Geyer's initial positive sequence and the result clamped
/// to `[1, N]`. Multivariate chains report the smallest per-dimension ESS.
pub fn ess_mcmc(chain: &[Vec<f64>]) -> Result<f64> {
    if chain.len() < 2 {
        return Err(Error::ChainTooShort(chain.len()));
    }
    let dims = chain[0].len();
    let mut best = f64::INFINITY;
    for d in 0..dims {
        let series: Vec<f64> = chain.iter().map(|s| s[d]).collect();
        best = best.min(ess_1d(&series, d)?);
    }
    Ok(best)
}

/// Monte Carlo KL estimate. `Infinite` means a point was found where `p > 0`
/// and `q = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlEstimate {
    Finite(f64),
    Infinite,
}

impl KlEstimate {
    pub fn value(self) -> f64 {
        match self {
            KlEstimate::Finite(v) => v,
            KlEstimate::Infinite => f64::INFINITY,
        }
    }
}

/// `n` points drawn uniformly on `bounds`.
pub fn uniform_points<R: Rng + ?Sized>(bounds: &DomainBounds, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            bounds
                .min()
                .iter()
                .zip(bounds.max())
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

/// `(V / n) Σ p(x_i) log(p(x_i) / q(x_i))` over the given uniform points.
pub fn kl_on_points<P, Q>(p: P, q: Q, points: &[Vec<f64>], volume: f64) -> KlEstimate
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
{
    let mut sum = 0.0;
    for x in points {
        let pv = p(x);
        if pv == 0.0 {
            continue;
        }
        let qv = q(x);
        if qv == 0.0 {
            return KlEstimate::Infinite;
        }
        sum += pv * (pv / qv).ln();
    }
    KlEstimate::Finite(volume * sum / points.len() as f64)
}

/// KL divergence `D(p || q)` estimated from `n` uniform points on `bounds`.
pub fn kl_mc<P, Q, R>(p: P, q: Q, bounds: &DomainBounds, n: usize, rng: &mut R) -> KlEstimate
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let points = uniform_points(bounds, n, rng);
    kl_on_points(p, q, &points, bounds.volume())
}

fn xlog_ratio(a: f64, m: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / m).ln()
    }
}

/// Jensen-Shannon divergence over a shared uniform point set. Both KL halves
/// use the same points, so the estimate is exactly symmetric in `p`, `q`.
pub fn jsd_on_points<P, Q>(p: P, q: Q, points: &[Vec<f64>], volume: f64) -> f64
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
{
    let mut sum = 0.0;
    for x in points {
        let (pv, qv) = (p(x), q(x));
        let m = 0.5 * (pv + qv);
        if m == 0.0 {
            continue;
        }
        sum += 0.5 * (xlog_ratio(pv, m) + xlog_ratio(qv, m));
    }
    volume * sum / points.len() as f64
}

pub fn jsd<P, Q, R>(p: P, q: Q, bounds: &DomainBounds, n: usize, rng: &mut R) -> f64
where
    P: Fn(&[f64]) -> f64,
    Q: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let points = uniform_points(bounds, n, rng);
    jsd_on_points(p, q, &points, bounds.volume())
}

/// Upper bound of the Jensen-Shannon divergence (natural log).
pub const JSD_MAX: f64 = LN_2;

/// Gaussian product-kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    points: Vec<Vec<f64>>,
    bandwidth: f64,
    dims: usize,
    norm: f64,
}

impl Kde {
    pub fn fit(points: Vec<Vec<f64>>, bandwidth: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("KDE needs at least one point".into()));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidConfig("KDE bandwidth must be positive".into()));
        }
        let dims = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: p.len(),
            });
        }
        let norm = 1.0 / (points.len() as f64 * (2.0 * PI * bandwidth * bandwidth).powf(dims as f64 / 2.0));
        Ok(Self {
            points,
            bandwidth,
            dims,
            norm,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let sq: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq * inv).exp()
            })
            .sum();
        sum * self.norm
    }
}

/// Evidence estimate: the mean of raw importance weights.
pub fn evidence_estimate(weights: &[f64]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    weights.iter().sum::<f64>() / weights.len() as f64
}

/// Mean squared deviation of evidence estimates from the true evidence.
pub fn evidence_mse(estimates: &[f64], true_z: f64) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    estimates.iter().map(|z| (z - true_z) * (z - true_z)).sum::<f64>() / estimates.len() as f64
}

/// Self-normalized importance-sampling estimate of `E_π[f]`.
pub fn expectation_estimate<F>(f: F, samples: &[Vec<f64>], weights: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if samples.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    Ok(samples.iter().zip(weights).map(|(x, w)| f(x) * (w / total)).sum())
}

/// Per-run evaluation summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub ness: f64,
    pub jsd: f64,
    pub evidence_mse: f64,
    pub wall_time_seconds: f64,
}
