//! Tree-pyramid adaptive importance sampling (TP-AIS).
//!
//! The proposal distribution is a mixture whose components are the leaves of
//! a full 2^K-ary tree of hypercube cells. Each iteration expands one leaf into
//! its 2^K children, draws one sample per new child and weights it against the
//! target. The crate also ships the pieces needed to evaluate the sampler:
//! randomized Gaussian-mixture targets, Metropolis-Hastings and population
//! Monte Carlo baselines, and the usual diagnostics (ESS, Jensen-Shannon
//! divergence, KDE, evidence error).
//!
//! ```
//! use tpais::sampler::{run_tp_ais, SamplerConfig};
//! use tpais::targets::{make_normal_target, TargetDensity};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let target = make_normal_target(&mut rng, 1);
//! let config = SamplerConfig::new(target.bounds().clone(), 64);
//! let run = run_tp_ais(&target, &config).unwrap();
//! assert!(run.samples.len() >= 64);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod baselines;
pub mod error;
pub mod metrics;
pub mod proposal;
pub mod sampler;
pub mod targets;
pub mod tree;

pub use error::{Error, Result};
pub use proposal::{Kernel, MixtureWeights, ProposalDistribution};
pub use sampler::{run_tp_ais, NodeSelection, SamplerConfig, TpAisRun, WeightedSampleSet, Weighting};
pub use targets::{GaussianMixture, GmmTarget, TargetDensity, TargetFamily};
pub use tree::{DomainBounds, Node, NodeId, TreePyramid};
