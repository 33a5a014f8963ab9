//! Sampling methods compared by the harness and the per-run metrics.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpais::baselines::{run_mh, run_pmc, MhConfig, PmcConfig, DEFAULT_MH_STEP};
use tpais::metrics::{ess_mcmc, ness_is, jsd_on_points, Kde, DEFAULT_KDE_BANDWIDTH};
use tpais::{
    run_tp_ais, GmmTarget, Kernel, NodeSelection, SamplerConfig, TargetDensity, Weighting,
};

use crate::BenchError;

/// Candidate points drawn when choosing the MH starting state.
const MH_INIT_CANDIDATES: usize = 1000;
/// PMC runs at most this many adaptation rounds.
const PMC_MAX_ITERATIONS: usize = 8;
const PMC_KERNEL_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Standard weights, uniform kernel, max-evidence selection, leaf resampling.
    TpAis,
    /// As `TpAis` without leaf resampling.
    TpAisNoResample,
    /// Deterministic-mixture weights.
    TpAisDm,
    /// Mixture-draw node selection.
    TpAisMix,
    /// Gaussian kernel.
    TpAisGauss,
    /// Random-walk Metropolis-Hastings; density via a KDE of the chain.
    Mh,
    Pmc,
    DmPmc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::TpAis,
        Method::TpAisNoResample,
        Method::TpAisDm,
        Method::TpAisMix,
        Method::TpAisGauss,
        Method::Mh,
        Method::Pmc,
        Method::DmPmc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::TpAis => "tpais",
            Method::TpAisNoResample => "tpais-nors",
            Method::TpAisDm => "tpais-dm",
            Method::TpAisMix => "tpais-mix",
            Method::TpAisGauss => "tpais-gauss",
            Method::Mh => "mh",
            Method::Pmc => "pmc",
            Method::DmPmc => "dm-pmc",
        }
    }

    pub fn is_mcmc(self) -> bool {
        self == Method::Mh
    }

    fn sampler_config(self, target: &GmmTarget, n: usize, seed: u64) -> Option<SamplerConfig> {
        let base = SamplerConfig::new(target.bounds().clone(), n)
            .seed(seed)
            .resample_leaves(true);
        let cfg = match self {
            Method::TpAis => base,
            Method::TpAisNoResample => base.resample_leaves(false),
            Method::TpAisDm => base.weighting(Weighting::DeterministicMixture),
            Method::TpAisMix => base.selection(NodeSelection::MixtureDraw),
            Method::TpAisGauss => base.kernel(Kernel::Gaussian),
            Method::Mh | Method::Pmc | Method::DmPmc => return None,
        };
        Some(cfg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or(BenchError::UnknownMethod(s))
    }
}

/// Metrics of one run. `evidence_sq_error` is NaN for methods without an
/// evidence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub ness: f64,
    pub jsd: f64,
    pub evidence_sq_error: f64,
    pub wall_time_seconds: f64,
}

/// Knobs shared by every run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub kde_bandwidth: f64,
    pub mh_step: f64,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            kde_bandwidth: DEFAULT_KDE_BANDWIDTH,
            mh_step: DEFAULT_MH_STEP,
            timing: true,
        }
    }
}

/// PMC population size and iteration count spending about `n` samples.
pub fn pmc_schedule(n: usize) -> (usize, usize) {
    let iterations = n.clamp(1, PMC_MAX_ITERATIONS);
    (n.div_ceil(iterations).max(1), iterations)
}

/// Runs `method` for `n` samples on `target` and scores it on `jsd_points`.
/// The true evidence of every bench target is 1.
pub fn run_method(
    method: Method,
    target: &GmmTarget,
    n: usize,
    seed: u64,
    jsd_points: &[Vec<f64>],
    opts: &RunOptions,
) -> Result<RunMetrics, BenchError> {
    let volume = target.bounds().volume();
    let pi = |x: &[f64]| target.density(x);
    let start = Instant::now();
    let elapsed = |start: Instant| {
        if opts.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    if let Some(cfg) = method.sampler_config(target, n, seed) {
        let run = run_tp_ais(target, &cfg)?;
        let wall = elapsed(start);
        let q = run.proposal();
        let z = run.evidence();
        return Ok(RunMetrics {
            ness: ness_is(run.samples.weights())?,
            jsd: jsd_on_points(pi, |x: &[f64]| q.density(x), jsd_points, volume),
            evidence_sq_error: (z - 1.0).powi(2),
            wall_time_seconds: wall,
        });
    }

    match method {
        Method::Mh => {
            let initial = mh_initial_point(target, seed)?;
            let mut cfg = MhConfig::new(initial, n);
            cfg.proposal_std = opts.mh_step;
            cfg.seed = seed;
            let start = Instant::now();
            let chain = run_mh(target, &cfg)?;
            let wall = elapsed(start);
            let ness = ess_mcmc(&chain.states)? / n as f64;
            let kde = Kde::fit(chain.states, opts.kde_bandwidth)?;
            Ok(RunMetrics {
                ness,
                jsd: jsd_on_points(pi, |x: &[f64]| kde.density(x), jsd_points, volume),
                evidence_sq_error: f64::NAN,
                wall_time_seconds: wall,
            })
        }
        Method::Pmc | Method::DmPmc => {
            let (pop, iters) = pmc_schedule(n);
            let mut cfg = PmcConfig::new(pop, iters);
            cfg.kernel_std = PMC_KERNEL_STD;
            cfg.seed = seed;
            cfg.weighting = if method == Method::DmPmc {
                Weighting::DeterministicMixture
            } else {
                Weighting::Standard
            };
            let run = run_pmc(target, &cfg)?;
            let wall = elapsed(start);
            let w = run.samples.weights();
            let z = w.iter().sum::<f64>() / w.len() as f64;
            Ok(RunMetrics {
                ness: ness_is(w)?,
                jsd: jsd_on_points(pi, |x: &[f64]| run.proposal_density(x), jsd_points, volume),
                evidence_sq_error: (z - 1.0).powi(2),
                wall_time_seconds: wall,
            })
        }
        _ => unreachable!("tree-pyramid methods handled above"),
    }
}

/// Highest-density point among seeded uniform candidates on the domain.
fn mh_initial_point(target: &GmmTarget, seed: u64) -> Result<Vec<f64>, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d68_5f69_6e69_7400);
    let candidates = tpais::metrics::uniform_points(target.bounds(), MH_INIT_CANDIDATES, &mut rng);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x in candidates {
        let d = target.density(&x);
        if d > 0.0 && best.as_ref().is_none_or(|(b, _)| d > *b) {
            best = Some((d, x));
        }
    }
    best.map(|(_, x)| x)
        .ok_or_else(|| BenchError::Run("no starting point with positive density".into()))
}
