//! Ground-truth target densities built from diagonal Gaussian mixtures.
//!
//! Three randomized families are provided, all on the domain `[-1, 1]^K`:
//!
//! * `normal`: one component, mean coordinates `U(-1, 1)`, isotropic standard
//!   deviation `U(0.01, 0.05)`.
//! * `gmm5`: five equally weighted components, mean coordinates `U(-1, 1)`,
//!   diagonal variances `U(0.01, 0.05)`.
//! * `egg`: an egg-crate grid of four modes per dimension at
//!   `{-0.6, -0.2, 0.2, 0.6}`, variance `0.01`, equal weights.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tree::DomainBounds;

/// Largest dimension accepted by [`make_egg_target`] (4^7 components).
pub const MAX_EGG_DIMS: usize = 7;

const EGG_GRID: [f64; 4] = [-0.6, -0.2, 0.2, 0.6];

/// A density over a bounded domain.
pub trait TargetDensity {
    fn bounds(&self) -> &DomainBounds;

    /// Density at `x`; must be finite and non-negative.
    fn density(&self, x: &[f64]) -> f64;

    fn dims(&self) -> usize {
        self.bounds().dims()
    }

    /// The generating mixture, when the target has one.
    fn true_model(&self) -> Option<&GaussianMixture> {
        None
    }
}

impl<T: TargetDensity + ?Sized> TargetDensity for &T {
    fn bounds(&self) -> &DomainBounds {
        (**self).bounds()
    }
    fn density(&self, x: &[f64]) -> f64 {
        (**self).density(x)
    }
    fn true_model(&self) -> Option<&GaussianMixture> {
        (**self).true_model()
    }
}

/// Wraps a closure as a target.
pub struct FnTarget<F> {
    bounds: DomainBounds,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnTarget<F> {
    pub fn new(bounds: DomainBounds, f: F) -> Self {
        Self { bounds, f }
    }
}

impl<F: Fn(&[f64]) -> f64> TargetDensity for FnTarget<F> {
    fn bounds(&self) -> &DomainBounds {
        &self.bounds
    }
    fn density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Mixture of axis-aligned normals.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    weights: Vec<f64>,
    // log of weight / sqrt((2π)^K |Σ|), per component
    log_scale: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != variances.len() || means.len() != weights.len() {
            return Err(Error::InvalidConfig(
                "mixture needs matching, non-empty means, variances and weights".into(),
            ));
        }
        let dims = means[0].len();
        for (m, v) in means.iter().zip(&variances) {
            if m.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, got: m.len() });
            }
            if v.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, got: v.len() });
            }
            if v.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(Error::InvalidConfig("variances must be positive".into()));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "mixture weights must be non-negative and sum to 1 (sum {total})"
            )));
        }
        let log_scale = variances
            .iter()
            .zip(&weights)
            .map(|(v, &w)| {
                let log_det: f64 = v.iter().map(|s| s.ln()).sum();
                w.ln() - 0.5 * (dims as f64 * (2.0 * PI).ln() + log_det)
            })
            .collect();
        Ok(Self {
            means,
            variances,
            weights,
            log_scale,
        })
    }

    pub fn dims(&self) -> usize {
        self.means[0].len()
    }

    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Diagonals of the component covariances.
    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mixture density on all of R^K.
    pub fn density(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((mean, var), &log_scale) in self.means.iter().zip(&self.variances).zip(&self.log_scale) {
            let q: f64 = mean
                .iter()
                .zip(var)
                .zip(x)
                .map(|((m, s), v)| (v - m) * (v - m) / s)
                .sum();
            total += (log_scale - 0.5 * q).exp();
        }
        total
    }

    /// Mean of the mixture.
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims()];
        for (m, w) in self.means.iter().zip(&self.weights) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let alpha = 1.0 - rng.random::<f64>();
        let mut acc = 0.0;
        let mut idx = self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if acc >= alpha {
                idx = i;
                break;
            }
        }
        self.means[idx]
            .iter()
            .zip(&self.variances[idx])
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s.sqrt() * z
            })
            .collect()
    }
}

/// A Gaussian mixture restricted to a bounded domain. The density is the
/// mixture density inside the domain and zero outside; it is not
/// renormalized for the mass the domain cuts off.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmTarget {
    model: GaussianMixture,
    bounds: DomainBounds,
}

impl GmmTarget {
    pub fn new(model: GaussianMixture, bounds: DomainBounds) -> Result<Self> {
        if model.dims() != bounds.dims() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dims(),
                got: model.dims(),
            });
        }
        Ok(Self { model, bounds })
    }

    pub fn model(&self) -> &GaussianMixture {
        &self.model
    }
}

impl TargetDensity for GmmTarget {
    fn bounds(&self) -> &DomainBounds {
        &self.bounds
    }

    fn density(&self, x: &[f64]) -> f64 {
        if self.bounds.contains(x) {
            self.model.density(x)
        } else {
            0.0
        }
    }

    fn true_model(&self) -> Option<&GaussianMixture> {
        Some(&self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetFamily {
    Normal,
    Gmm5,
    Egg,
}

impl TargetFamily {
    pub const ALL: [TargetFamily; 3] = [TargetFamily::Normal, TargetFamily::Gmm5, TargetFamily::Egg];

    pub fn name(self) -> &'static str {
        match self {
            TargetFamily::Normal => "normal",
            TargetFamily::Gmm5 => "gmm5",
            TargetFamily::Egg => "egg",
        }
    }
}

impl fmt::Display for TargetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(TargetFamily::Normal),
            "gmm5" | "gmm" => Ok(TargetFamily::Gmm5),
            "egg" => Ok(TargetFamily::Egg),
            other => Err(Error::InvalidConfig(format!("unknown target family `{other}`"))),
        }
    }
}

fn unit_domain(dims: usize) -> DomainBounds {
    DomainBounds::cube(-1.0, 1.0, dims).expect("dims must be at least 1")
}

pub fn make_normal_target<R: Rng + ?Sized>(rng: &mut R, dims: usize) -> GmmTarget {
    let mean: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
    let std: f64 = rng.random_range(0.01..0.05);
    let model = GaussianMixture::new(vec![mean], vec![vec![std * std; dims]], vec![1.0])
        .expect("valid single component");
    GmmTarget::new(model, unit_domain(dims)).expect("dims agree")
}

pub fn make_gmm5_target<R: Rng + ?Sized>(rng: &mut R, dims: usize) -> GmmTarget {
    let mut means = Vec::with_capacity(5);
    let mut variances = Vec::with_capacity(5);
    for _ in 0..5 {
        means.push((0..dims).map(|_| rng.random_range(-1.0..1.0)).collect());
        variances.push((0..dims).map(|_| rng.random_range(0.01..0.05)).collect());
    }
    let model = GaussianMixture::new(means, variances, vec![0.2; 5]).expect("valid 5-component mixture");
    GmmTarget::new(model, unit_domain(dims)).expect("dims agree")
}

pub fn make_egg_target(dims: usize) -> Result<GmmTarget> {
    if dims == 0 || dims > MAX_EGG_DIMS {
        return Err(Error::TooManyComponents { dims });
    }
    let count = 4usize.pow(dims as u32);
    let means: Vec<Vec<f64>> = (0..count)
        .map(|mut i| {
            let mut m = vec![0.0; dims];
            for d in (0..dims).rev() {
                m[d] = EGG_GRID[i % 4];
                i /= 4;
            }
            m
        })
        .collect();
    let weight = 1.0 / count as f64;
    let mut weights = vec![weight; count];
    // keep the sum within rounding of 1 for any count
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;
    let model = GaussianMixture::new(means, vec![vec![0.01; dims]; count], weights)?;
    GmmTarget::new(model, unit_domain(dims))
}

pub fn make_target<R: Rng + ?Sized>(family: TargetFamily, rng: &mut R, dims: usize) -> Result<GmmTarget> {
    if dims == 0 {
        return Err(Error::InvalidConfig("dims must be at least 1".into()));
    }
    match family {
        TargetFamily::Normal => Ok(make_normal_target(rng, dims)),
        TargetFamily::Gmm5 => Ok(make_gmm5_target(rng, dims)),
        TargetFamily::Egg => make_egg_target(dims),
    }
}
