//! Reference samplers: random-walk Metropolis-Hastings and a population Monte
//! Carlo loop with standard or deterministic-mixture weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::proposal::{isotropic_normal_density, MixtureWeights};
use crate::sampler::{WeightedSampleSet, Weighting};
use crate::targets::TargetDensity;

pub const DEFAULT_MH_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    /// Std of the isotropic Gaussian random-walk step.
    pub proposal_std: f64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub initial_point: Vec<f64>,
}

impl MhConfig {
    pub fn new(initial_point: Vec<f64>, n_samples: usize) -> Self {
        Self {
            proposal_std: DEFAULT_MH_STEP,
            n_samples,
            burn_in: 0,
            seed: 0,
            initial_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhChain {
    pub states: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

/// Metropolis acceptance for a symmetric proposal, given `u ~ U[0,1)`.
pub fn mh_accept(current_density: f64, proposed_density: f64, u: f64) -> bool {
    if proposed_density >= current_density {
        return true;
    }
    u < proposed_density / current_density
}

/// Random-walk Metropolis-Hastings. Proposals outside the target bounds are
/// rejected. Returns `n_samples` states recorded after `burn_in` steps.
pub fn run_mh<T: TargetDensity + ?Sized>(target: &T, config: &MhConfig) -> Result<MhChain> {
    if !(config.proposal_std > 0.0) {
        return Err(Error::InvalidConfig("proposal_std must be positive".into()));
    }
    if config.initial_point.len() != target.dims() {
        return Err(Error::DimensionMismatch {
            expected: target.dims(),
            got: config.initial_point.len(),
        });
    }
    let bounds = target.bounds();
    let mut x = config.initial_point.clone();
    let mut px = if bounds.contains(&x) { target.density(&x) } else { 0.0 };
    if !(px > 0.0 && px.is_finite()) {
        return Err(Error::ZeroInitialDensity);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states = Vec::with_capacity(config.n_samples);
    let mut accepted = 0usize;
    let mut proposal = vec![0.0; x.len()];
    for step in 0..config.burn_in + config.n_samples {
        for (p, &v) in proposal.iter_mut().zip(&x) {
            let z: f64 = rng.sample(StandardNormal);
            *p = v + config.proposal_std * z;
        }
        let u: f64 = rng.random();
        let moved = if bounds.contains(&proposal) {
            let pp = target.density(&proposal);
            if !(pp.is_finite() && pp >= 0.0) {
                return Err(Error::InvalidDensity {
                    value: pp,
                    point: proposal.clone(),
                });
            }
            if mh_accept(px, pp, u) {
                x.copy_from_slice(&proposal);
                px = pp;
                true
            } else {
                false
            }
        } else {
            false
        };
        if step >= config.burn_in {
            accepted += moved as usize;
            states.push(x.clone());
        }
    }
    let acceptance_rate = if config.n_samples > 0 {
        accepted as f64 / config.n_samples as f64
    } else {
        0.0
    };
    Ok(MhChain {
        states,
        acceptance_rate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmcConfig {
    pub population_size: usize,
    pub iterations: usize,
    /// Std of every isotropic Gaussian component.
    pub kernel_std: f64,
    pub weighting: Weighting,
    pub seed: u64,
    /// Starting component means; drawn uniformly on the bounds when `None`.
    pub initial_locations: Option<Vec<Vec<f64>>>,
}

impl PmcConfig {
    pub fn new(population_size: usize, iterations: usize) -> Self {
        Self {
            population_size,
            iterations,
            kernel_std: 0.1,
            weighting: Weighting::Standard,
            seed: 0,
            initial_locations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmcRun {
    /// Every sample from every iteration with its importance weight.
    pub samples: WeightedSampleSet,
    /// Component means after the last resampling step.
    pub locations: Vec<Vec<f64>>,
    pub kernel_std: f64,
}

impl PmcRun {
    /// Density of the final equally weighted Gaussian mixture.
    pub fn proposal_density(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .locations
            .iter()
            .map(|m| isotropic_normal_density(m, self.kernel_std, x))
            .sum();
        sum / self.locations.len() as f64
    }
}

/// Population Monte Carlo: each iteration draws one sample per component,
/// weights it, and multinomially resamples the component means from the
/// weighted samples. Iterations where every weight is zero keep the previous
/// means.
pub fn run_pmc<T: TargetDensity + ?Sized>(target: &T, config: &PmcConfig) -> Result<PmcRun> {
    if config.population_size == 0 || config.iterations == 0 {
        return Err(Error::InvalidConfig(
            "population_size and iterations must be at least 1".into(),
        ));
    }
    if !(config.kernel_std > 0.0) {
        return Err(Error::InvalidConfig("kernel_std must be positive".into()));
    }
    let dims = target.dims();
    let bounds = target.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut locations: Vec<Vec<f64>> = match &config.initial_locations {
        Some(locs) => {
            if locs.len() != config.population_size || locs.iter().any(|l| l.len() != dims) {
                return Err(Error::InvalidConfig("initial locations do not match the population".into()));
            }
            locs.clone()
        }
        None => (0..config.population_size)
            .map(|_| {
                bounds
                    .min()
                    .iter()
                    .zip(bounds.max())
                    .map(|(&lo, &hi)| rng.random_range(lo..hi))
                    .collect()
            })
            .collect(),
    };

    let mut all = WeightedSampleSet::default();
    let pop = config.population_size;
    for _ in 0..config.iterations {
        let xs: Vec<Vec<f64>> = locations
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&c| {
                        let z: f64 = rng.sample(StandardNormal);
                        c + config.kernel_std * z
                    })
                    .collect()
            })
            .collect();
        let mut ws = Vec::with_capacity(pop);
        for (x, m) in xs.iter().zip(&locations) {
            let pi = target.density(x);
            if !(pi.is_finite() && pi >= 0.0) {
                return Err(Error::InvalidDensity {
                    value: pi,
                    point: x.clone(),
                });
            }
            let denom = match config.weighting {
                Weighting::Standard => isotropic_normal_density(m, config.kernel_std, x),
                Weighting::DeterministicMixture => {
                    locations
                        .iter()
                        .map(|mj| isotropic_normal_density(mj, config.kernel_std, x))
                        .sum::<f64>()
                        / pop as f64
                }
            };
            ws.push(if denom > 0.0 { pi / denom } else { 0.0 });
        }
        if let Ok(mix) = MixtureWeights::from_scores(ws.clone()) {
            locations = (0..pop).map(|_| xs[mix.sample(&mut rng)].clone()).collect();
        }
        all.extend(WeightedSampleSet::new(xs, ws)?);
    }
    if !all.weights().iter().any(|&w| w > 0.0) {
        return Err(Error::PopulationCollapse);
    }
    Ok(PmcRun {
        samples: all,
        locations,
        kernel_std: config.kernel_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ess_is, ess_mcmc};
    use crate::targets::{make_gmm5_target, FnTarget, GaussianMixture, GmmTarget};
    use crate::tree::DomainBounds;

    fn unit(dims: usize) -> DomainBounds {
        DomainBounds::cube(-1.0, 1.0, dims).unwrap()
    }

    #[test]
    fn uphill_moves_always_accepted() {
        assert!(mh_accept(0.2, 0.3, 0.999_999));
        assert!(mh_accept(0.2, 0.2, 0.999_999));
        assert!(!mh_accept(0.4, 0.2, 0.6));
        assert!(mh_accept(0.4, 0.2, 0.4));
    }

    #[test]
    fn tiny_steps_accept_almost_everything() {
        let m = GaussianMixture::new(vec![vec![0.0]], vec![vec![0.04]], vec![1.0]).unwrap();
        let t = GmmTarget::new(m, unit(1)).unwrap();
        let mut cfg = MhConfig::new(vec![0.1], 2000);
        cfg.proposal_std = 1e-6;
        let chain = run_mh(&t, &cfg).unwrap();
        assert!(chain.acceptance_rate > 0.99);
        let drift = (chain.states.last().unwrap()[0] - 0.1).abs();
        assert!(drift < 1e-3);
    }

    #[test]
    fn zero_initial_density() {
        let t = FnTarget::new(unit(1), |x: &[f64]| if x[0] > 0.0 { 1.0 } else { 0.0 });
        assert_eq!(run_mh(&t, &MhConfig::new(vec![-0.5], 10)), Err(Error::ZeroInitialDensity));
        assert_eq!(run_mh(&t, &MhConfig::new(vec![3.0], 10)), Err(Error::ZeroInitialDensity));
    }

    #[test]
    fn chain_mean_within_ess_bound() {
        let mean = 0.3;
        let std = 0.05;
        let m = GaussianMixture::new(vec![vec![mean]], vec![vec![std * std]], vec![1.0]).unwrap();
        let t = GmmTarget::new(m, unit(1)).unwrap();
        let mut cfg = MhConfig::new(vec![mean], 10_000);
        cfg.seed = 17;
        let chain = run_mh(&t, &cfg).unwrap();
        let ess = ess_mcmc(&chain.states).unwrap();
        let est = chain.states.iter().map(|s| s[0]).sum::<f64>() / chain.states.len() as f64;
        assert!((est - mean).abs() < 3.0 * std / ess.sqrt(), "est {est} ess {ess}");
        assert!(chain.states.iter().all(|s| (-1.0..=1.0).contains(&s[0])));
    }

    #[test]
    fn burn_in_is_discarded() {
        let t = FnTarget::new(unit(1), |_| 0.5);
        let mut cfg = MhConfig::new(vec![0.0], 50);
        cfg.burn_in = 25;
        assert_eq!(run_mh(&t, &cfg).unwrap().states.len(), 50);
    }

    /// Discrete 5-state chain driven by the same acceptance rule with a ±1
    /// symmetric proposal; moves off the ends are rejected.
    #[test]
    fn detailed_balance_on_five_states() {
        let pi = [0.1, 0.3, 0.15, 0.25, 0.2];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let steps = 1_000_000;
        let mut counts = [[0u64; 5]; 5];
        let mut s = 2usize;
        for _ in 0..steps {
            let up = rng.random::<bool>();
            let u: f64 = rng.random();
            let next = if up { s + 1 } else { s.wrapping_sub(1) };
            let t = if next < 5 && mh_accept(pi[s], pi[next], u) { next } else { s };
            counts[s][t] += 1;
            s = t;
        }
        for i in 0..4 {
            let fwd = counts[i][i + 1] as f64 / steps as f64;
            let back = counts[i + 1][i] as f64 / steps as f64;
            let expected = 0.5 * pi[i].min(pi[i + 1]);
            // flows are O(0.05) with binomial std ~2e-4
            assert!((fwd - back).abs() < 2e-3, "{i}: {fwd} vs {back}");
            assert!((fwd - expected).abs() < 2e-3, "{i}: {fwd} vs {expected}");
        }
    }

    #[test]
    fn pmc_with_proposal_equal_to_target() {
        let std = 0.1;
        let m = GaussianMixture::new(vec![vec![0.2]], vec![vec![std * std]], vec![1.0]).unwrap();
        let t = GmmTarget::new(m, DomainBounds::cube(-10.0, 10.0, 1).unwrap()).unwrap();
        let mut cfg = PmcConfig::new(1, 1);
        cfg.kernel_std = std;
        cfg.initial_locations = Some(vec![vec![0.2]]);
        let run = run_pmc(&t, &cfg).unwrap();
        assert!((run.samples.weights()[0] - 1.0).abs() < 1e-12);
        assert_eq!(run.locations, run.samples.samples().to_vec());
    }

    #[test]
    fn dm_equals_standard_for_identical_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = make_gmm5_target(&mut rng, 1);
        let locs = vec![vec![0.1]; 8];
        let mut cfg = PmcConfig::new(8, 1);
        cfg.initial_locations = Some(locs);
        let std = run_pmc(&t, &cfg).unwrap();
        cfg.weighting = Weighting::DeterministicMixture;
        let dm = run_pmc(&t, &cfg).unwrap();
        for (a, b) in std.samples.weights().iter().zip(dm.samples.weights()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn pmc_population_and_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = make_gmm5_target(&mut rng, 2);
        let mut cfg = PmcConfig::new(20, 5);
        cfg.seed = 1;
        let run = run_pmc(&t, &cfg).unwrap();
        assert_eq!(run.samples.len(), 100);
        assert_eq!(run.locations.len(), 20);
        assert!(run.samples.weights().iter().all(|w| w.is_finite() && *w >= 0.0));
    }

    #[test]
    fn pmc_collapse() {
        let t = FnTarget::new(unit(1), |_| 0.0);
        assert_eq!(run_pmc(&t, &PmcConfig::new(4, 2)), Err(Error::PopulationCollapse));
    }

    #[test]
    fn dm_weighting_raises_ess() {
        let mut better = Vec::new();
        let mut worse = Vec::new();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let t = make_gmm5_target(&mut rng, 1);
            let mut cfg = PmcConfig::new(100, 10);
            cfg.seed = seed;
            let s = run_pmc(&t, &cfg).unwrap();
            cfg.weighting = Weighting::DeterministicMixture;
            let d = run_pmc(&t, &cfg).unwrap();
            worse.push(ess_is(s.samples.weights()).unwrap() / s.samples.len() as f64);
            better.push(ess_is(d.samples.weights()).unwrap() / d.samples.len() as f64);
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.total_cmp(b));
            0.5 * (v[9] + v[10])
        };
        let (b, w) = (median(&mut better), median(&mut worse));
        assert!(b > w, "dm {b} vs standard {w}");
    }
}
