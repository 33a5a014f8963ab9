//! The tree-pyramid adaptive importance sampler.
//!
//! Each iteration picks one leaf, expands it into 2^K children and draws one
//! sample from every child component. Flavors:
//!
//! * [`Weighting::Standard`] divides the target by the generating component,
//!   [`Weighting::DeterministicMixture`] by the whole leaf mixture. DM weights
//!   are re-evaluated against the final tree before the run is returned.
//! * [`NodeSelection::MaxEvidence`] expands the leaf maximizing
//!   `π(x_n) r_n^K` (ties go to the earliest leaf), while
//!   [`NodeSelection::MixtureDraw`] draws the leaf from the mixture weighted
//!   by `w_n r_n^K`.
//! * With `resample_leaves`, every leaf redraws its sample before each
//!   selection and only the latest samples are kept.
//!
//! The returned sample set holds exactly one sample per leaf of the final
//! tree. The loop stops as soon as the leaf count reaches the requested
//! sample count, so it may overshoot by at most `2^K - 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::proposal::{mixture_weights, Kernel, MixtureWeights, ProposalDistribution};
use crate::targets::TargetDensity;
use crate::tree::{DomainBounds, LeafSample, NodeId, TreePyramid, DEFAULT_MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Standard,
    DeterministicMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeSelection {
    #[default]
    MaxEvidence,
    MixtureDraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub bounds: DomainBounds,
    /// Minimum number of leaves (and so returned samples).
    pub n_samples: usize,
    pub kernel: Kernel,
    pub weighting: Weighting,
    pub selection: NodeSelection,
    pub resample_leaves: bool,
    pub seed: u64,
    pub max_depth: u32,
}

impl SamplerConfig {
    /// Standard weights, uniform kernel, max-evidence selection, no
    /// resampling, seed 0.
    pub fn new(bounds: DomainBounds, n_samples: usize) -> Self {
        Self {
            bounds,
            n_samples,
            kernel: Kernel::Uniform,
            weighting: Weighting::Standard,
            selection: NodeSelection::MaxEvidence,
            resample_leaves: false,
            seed: 0,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn selection(mut self, selection: NodeSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn resample_leaves(mut self, resample: bool) -> Self {
        self.resample_leaves = resample;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn dims(&self) -> usize {
        self.bounds.dims()
    }
}

/// Samples with non-negative importance weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSampleSet {
    samples: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl WeightedSampleSet {
    pub fn new(samples: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if samples.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                got: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidConfig(format!("invalid importance weight {w}")));
        }
        Ok(Self { samples, weights })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_parts(self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (self.samples, self.weights)
    }

    pub fn extend(&mut self, other: WeightedSampleSet) {
        self.samples.extend(other.samples);
        self.weights.extend(other.weights);
    }
}

/// `π(x) / Q_i(x)` for the component that generated `x`.
pub fn standard_weight(target_density: f64, component_density: f64) -> Result<f64> {
    if !(component_density > 0.0) {
        return Err(Error::ZeroProposalDensity);
    }
    Ok(target_density / component_density)
}

/// `π(x) / Q(x)` against the full leaf mixture.
pub fn dm_weight(target_density: f64, q: &ProposalDistribution<'_>, x: &[f64]) -> Result<f64> {
    let mix = q.density(x);
    if !(mix > 0.0) {
        return Err(Error::ZeroProposalDensity);
    }
    Ok(target_density / mix)
}

fn checked_density<T: TargetDensity + ?Sized>(target: &T, x: &[f64]) -> Result<f64> {
    let value = target.density(x);
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::InvalidDensity {
            value,
            point: x.to_vec(),
        });
    }
    Ok(value)
}

/// Result of a sampler run.
#[derive(Debug, Clone)]
pub struct TpAisRun {
    /// One sample per leaf of `tree`, in leaf order.
    pub samples: WeightedSampleSet,
    pub tree: TreePyramid,
    pub kernel: Kernel,
    /// Nodes expanded, in order.
    pub expanded: Vec<NodeId>,
    /// Number of target density evaluations.
    pub evaluations: usize,
}

impl TpAisRun {
    pub fn proposal(&self) -> ProposalDistribution<'_> {
        ProposalDistribution::new(&self.tree, self.kernel)
    }

    /// `π(x) / Q(x)` for each returned sample against the final mixture.
    pub fn dm_weights(&self) -> Vec<f64> {
        let q = self.proposal();
        self.tree
            .leaves()
            .iter()
            .map(|&l| {
                let s = self.tree.node(l).sample().expect("leaves carry samples");
                let mix = q.density(&s.point);
                if mix > 0.0 {
                    s.target_density / mix
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Evidence estimate: the mean of [`Self::dm_weights`]. With the uniform
    /// kernel this is the stratified sum `Σ π(x_i) vol_i` over the leaves.
    pub fn evidence(&self) -> f64 {
        let w = self.dm_weights();
        w.iter().sum::<f64>() / w.len() as f64
    }
}

/// Step-wise sampler. Stopping after any [`TpAis::step`] leaves a valid tree
/// and sample set.
pub struct TpAis<'t, T: TargetDensity + ?Sized> {
    target: &'t T,
    config: SamplerConfig,
    tree: TreePyramid,
    rng: ChaCha8Rng,
    expanded: Vec<NodeId>,
    evaluations: usize,
}

impl<'t, T: TargetDensity + ?Sized> TpAis<'t, T> {
    /// Builds the root cell and draws the initial sample from it.
    pub fn new(target: &'t T, config: SamplerConfig) -> Result<Self> {
        if config.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        if target.dims() != config.dims() {
            return Err(Error::DimensionMismatch {
                expected: config.dims(),
                got: target.dims(),
            });
        }
        let tree = TreePyramid::with_max_depth(config.bounds.clone(), config.max_depth)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sampler = Self {
            target,
            config,
            tree,
            rng,
            expanded: Vec::new(),
            evaluations: 0,
        };
        sampler.draw(NodeId::ROOT)?;
        Ok(sampler)
    }

    pub fn tree(&self) -> &TreePyramid {
        &self.tree
    }

    pub fn is_done(&self) -> bool {
        self.tree.leaf_count() >= self.config.n_samples
    }

    fn draw(&mut self, id: NodeId) -> Result<()> {
        let q = ProposalDistribution::new(&self.tree, self.config.kernel);
        let x = q.sample_component(id, &mut self.rng);
        let pi = checked_density(self.target, &x)?;
        self.evaluations += 1;
        let weight = match self.config.weighting {
            Weighting::Standard => standard_weight(pi, q.component_density(id, &x))?,
            Weighting::DeterministicMixture => dm_weight(pi, &q, &x)?,
        };
        self.tree.set_sample(
            id,
            LeafSample {
                point: x,
                target_density: pi,
                weight,
            },
        );
        Ok(())
    }

    fn select(&mut self) -> Result<NodeId> {
        let leaves = self.tree.leaves();
        let k = self.tree.dims() as i32;
        match self.config.selection {
            NodeSelection::MaxEvidence => {
                let mut best = leaves[0];
                let mut best_score = f64::NEG_INFINITY;
                for &l in leaves {
                    let n = self.tree.node(l);
                    let pi = n.sample().map_or(0.0, |s| s.target_density);
                    let score = pi * n.radius().powi(k);
                    if score > best_score {
                        best = l;
                        best_score = score;
                    }
                }
                Ok(best)
            }
            NodeSelection::MixtureDraw => {
                let weights = match mixture_weights(&self.tree) {
                    Ok(w) => w,
                    // nothing observed yet: fall back to volume-proportional draws
                    Err(Error::DegenerateMixture) => MixtureWeights::from_scores(
                        leaves.iter().map(|&l| self.tree.node(l).radius().powi(k)).collect(),
                    )?,
                    Err(e) => return Err(e),
                };
                let i = weights.sample(&mut self.rng);
                Ok(self.tree.leaves()[i])
            }
        }
    }

    /// One iteration: optional leaf resampling, selection, expansion and
    /// sampling of the new children.
    pub fn step(&mut self) -> Result<()> {
        if self.config.resample_leaves {
            let leaves = self.tree.leaves().to_vec();
            for l in leaves {
                self.draw(l)?;
            }
        }
        let chosen = self.select()?;
        let children = self.tree.expand(chosen)?;
        self.expanded.push(chosen);
        for c in children {
            self.draw(c)?;
        }
        Ok(())
    }

    /// Snapshot of the current leaf samples. DM weights are reported as
    /// stored, i.e. against the tree at the time each sample was weighted.
    pub fn sample_set(&self) -> WeightedSampleSet {
        let (samples, weights) = self
            .tree
            .leaves()
            .iter()
            .map(|&l| {
                let s = self.tree.node(l).sample().expect("leaves carry samples");
                (s.point.clone(), s.weight)
            })
            .unzip();
        WeightedSampleSet { samples, weights }
    }

    pub fn finish(mut self) -> TpAisRun {
        if self.config.weighting == Weighting::DeterministicMixture {
            let q = ProposalDistribution::new(&self.tree, self.config.kernel);
            let updated: Vec<(NodeId, f64)> = self
                .tree
                .leaves()
                .iter()
                .map(|&l| {
                    let s = self.tree.node(l).sample().expect("leaves carry samples");
                    let mix = q.density(&s.point);
                    (l, if mix > 0.0 { s.target_density / mix } else { 0.0 })
                })
                .collect();
            for (l, w) in updated {
                self.tree.set_weight(l, w);
            }
        }
        let samples = self.sample_set();
        TpAisRun {
            samples,
            tree: self.tree,
            kernel: self.config.kernel,
            expanded: self.expanded,
            evaluations: self.evaluations,
        }
    }
}

/// Runs the sampler until the tree has at least `config.n_samples` leaves.
pub fn run_tp_ais<T: TargetDensity + ?Sized>(target: &T, config: &SamplerConfig) -> Result<TpAisRun> {
    let mut sampler = TpAis::new(target, config.clone())?;
    while !sampler.is_done() {
        sampler.step()?;
    }
    Ok(sampler.finish())
}
