//! Mixture proposal parameterized by the leaves of a tree pyramid.
//!
//! `Q(x) = (1/|λ|) Σ_i D(x; c_i, r_i)` where the sum runs over the current
//! leaves. `D` is either uniform over the leaf cell or an isotropic normal
//! centered on the leaf with standard deviation equal to the leaf radius.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tree::{NodeId, TreePyramid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Uniform,
    /// Untruncated isotropic normal, std = leaf radius.
    Gaussian,
}

/// Density of an isotropic normal with the given center and std at `x`.
pub fn isotropic_normal_density(center: &[f64], std: f64, x: &[f64]) -> f64 {
    let k = center.len() as f64;
    let var = std * std;
    let sq: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
    (-0.5 * sq / var).exp() / (2.0 * PI * var).powf(k / 2.0)
}

/// Read-only view of a tree as a probability density.
#[derive(Debug, Clone, Copy)]
pub struct ProposalDistribution<'a> {
    tree: &'a TreePyramid,
    kernel: Kernel,
}

impl<'a> ProposalDistribution<'a> {
    pub fn new(tree: &'a TreePyramid, kernel: Kernel) -> Self {
        Self { tree, kernel }
    }

    pub fn tree(&self) -> &'a TreePyramid {
        self.tree
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Density of the component attached to node `id` (normally a leaf).
    pub fn component_density(&self, id: NodeId, x: &[f64]) -> f64 {
        let node = self.tree.node(id);
        match self.kernel {
            Kernel::Uniform => {
                if self.tree.cell_contains(id, x) {
                    1.0 / node.volume()
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => isotropic_normal_density(node.center(), node.radius(), x),
        }
    }

    /// Mixture density, the arithmetic mean of the leaf components.
    pub fn density(&self, x: &[f64]) -> f64 {
        let n = self.tree.leaf_count() as f64;
        match self.kernel {
            // Leaves partition the domain so a single component is non-zero.
            Kernel::Uniform => match self.tree.locate(x) {
                Some(leaf) => 1.0 / (n * self.tree.node(leaf).volume()),
                None => 0.0,
            },
            Kernel::Gaussian => {
                let sum: f64 = self
                    .tree
                    .leaves()
                    .iter()
                    .map(|&l| {
                        let node = self.tree.node(l);
                        isotropic_normal_density(node.center(), node.radius(), x)
                    })
                    .sum();
                sum / n
            }
        }
    }

    /// Draws one point from the component of node `id`.
    pub fn sample_component<R: Rng + ?Sized>(&self, id: NodeId, rng: &mut R) -> Vec<f64> {
        let node = self.tree.node(id);
        let (c, r) = (node.center(), node.radius());
        match self.kernel {
            Kernel::Uniform => {
                // Rounding in c + r(2u - 1) can land on a neighbour's face;
                // redraw so the point is in the cell under the descent rule.
                for _ in 0..64 {
                    let x: Vec<f64> = c
                        .iter()
                        .map(|&ci| ci + r * (2.0 * rng.random::<f64>() - 1.0))
                        .collect();
                    if self.tree.cell_contains(id, &x) {
                        return x;
                    }
                }
                c.to_vec()
            }
            Kernel::Gaussian => c
                .iter()
                .map(|&ci| {
                    let z: f64 = rng.sample(StandardNormal);
                    ci + r * z
                })
                .collect(),
        }
    }

    /// Draws from the equally weighted mixture.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let leaves = self.tree.leaves();
        let i = rng.random_range(0..leaves.len());
        self.sample_component(leaves[i], rng)
    }
}

/// Normalized per-leaf selection probabilities, aligned with
/// [`TreePyramid::leaves`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    values: Vec<f64>,
}

impl MixtureWeights {
    /// Normalizes non-negative scores into probabilities.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0 && total.is_finite()) || scores.iter().any(|s| *s < 0.0) {
            return Err(Error::DegenerateMixture);
        }
        Ok(Self {
            values: scores.into_iter().map(|s| s / total).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest index whose cumulative weight reaches `alpha`, for
    /// `alpha` in `(0, 1]`.
    pub fn select(&self, alpha: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.values.iter().enumerate() {
            acc += w;
            if acc >= alpha {
                return i;
            }
        }
        // cumulative sum fell short of 1 by rounding
        self.values
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(self.values.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // 1 - U[0,1) lies in (0,1], so a zero-weight prefix is never picked.
        let alpha = 1.0 - rng.random::<f64>();
        self.select(alpha)
    }
}

/// Leaf mixture weights proportional to `w_i * r_i^K`, the importance
/// volume of each leaf. Leaves without a sample contribute zero.
pub fn mixture_weights(tree: &TreePyramid) -> Result<MixtureWeights> {
    let k = tree.dims() as i32;
    let scores = tree
        .leaves()
        .iter()
        .map(|&l| {
            let n = tree.node(l);
            n.weight().unwrap_or(0.0) * n.radius().powi(k)
        })
        .collect();
    MixtureWeights::from_scores(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{DomainBounds, LeafSample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(lo: f64, hi: f64, dims: usize) -> TreePyramid {
        TreePyramid::new(DomainBounds::cube(lo, hi, dims).unwrap()).unwrap()
    }

    fn put_weight(t: &mut TreePyramid, id: NodeId, w: f64) {
        let c = t.node(id).center().to_vec();
        t.set_sample(
            id,
            LeafSample {
                point: c,
                target_density: w,
                weight: w,
            },
        );
    }

    #[test]
    fn component_density_values() {
        let t = tree(-1.0, 1.0, 1);
        let q = ProposalDistribution::new(&t, Kernel::Uniform);
        assert_eq!(q.component_density(NodeId::ROOT, &[0.3]), 0.5);

        let t2 = tree(-0.5, 0.5, 2);
        let q2 = ProposalDistribution::new(&t2, Kernel::Uniform);
        assert_eq!(q2.component_density(NodeId::ROOT, &[0.6, 0.0]), 0.0);

        let g = ProposalDistribution::new(&t, Kernel::Gaussian);
        let v = g.component_density(NodeId::ROOT, &[0.0]);
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn mixture_density_examples() {
        let mut t = tree(-1.0, 1.0, 1);
        assert_eq!(ProposalDistribution::new(&t, Kernel::Uniform).density(&[0.0]), 0.5);

        let kids = t.expand(NodeId::ROOT).unwrap();
        for x in [-1.0, -0.7, -0.01, 0.0, 0.4, 0.99] {
            assert_eq!(ProposalDistribution::new(&t, Kernel::Uniform).density(&[x]), 0.5);
        }

        // radii 0.5, 0.25, 0.25; x in a radius-0.25 cell
        t.expand(kids[0]).unwrap();
        let q = ProposalDistribution::new(&t, Kernel::Uniform);
        assert!((q.density(&[0.7]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.density(&[1.5]), 0.0);
    }

    #[test]
    fn gaussian_mixture_is_mean_of_components() {
        let mut t = tree(-1.0, 1.0, 1);
        t.expand(NodeId::ROOT).unwrap();
        let q = ProposalDistribution::new(&t, Kernel::Gaussian);
        let x = 0.1;
        let n = |m: f64, s: f64| (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        let expected = 0.5 * (n(0.5, 0.5) + n(-0.5, 0.5));
        assert!((q.density(&[x]) - expected).abs() < 1e-14);
    }

    #[test]
    fn uniform_samples_stay_in_cell() {
        let t = TreePyramid::new(DomainBounds::cube(1.5, 2.5, 2).unwrap()).unwrap();
        let q = ProposalDistribution::new(&t, Kernel::Uniform);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = q.sample_component(NodeId::ROOT, &mut rng);
            assert!(x.iter().all(|v| (1.5..=2.5).contains(v)));
        }
    }

    #[test]
    fn uniform_sample_mean() {
        let t = tree(-1.0, 1.0, 1);
        let q = ProposalDistribution::new(&t, Kernel::Uniform);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mean = (0..n).map(|_| q.sample_component(NodeId::ROOT, &mut rng)[0]).sum::<f64>() / n as f64;
        let bound = 3.0 * (2.0 / 12f64.sqrt()) / (n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} bound {bound}");
    }

    #[test]
    fn gaussian_sample_std() {
        let t = tree(-1.0, 1.0, 1);
        let q = ProposalDistribution::new(&t, Kernel::Gaussian);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| q.sample_component(NodeId::ROOT, &mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 1.0).abs() < 0.02);
    }

    #[test]
    fn mixture_weight_examples() {
        let mut t = tree(-1.0, 1.0, 1);
        let kids = t.expand(NodeId::ROOT).unwrap();
        put_weight(&mut t, kids[0], 1.0);
        put_weight(&mut t, kids[1], 1.0);
        assert_eq!(mixture_weights(&t).unwrap().values(), &[0.5, 0.5]);
        put_weight(&mut t, kids[0], 3.0);
        assert_eq!(mixture_weights(&t).unwrap().values(), &[0.75, 0.25]);

        // K=2, radii 0.5 and 0.25: only two leaves carry weight
        let mut t = tree(-1.0, 1.0, 2);
        let a = t.expand(NodeId::ROOT).unwrap();
        let b = t.expand(a[0]).unwrap();
        put_weight(&mut t, a[1], 1.0);
        put_weight(&mut t, b[0], 1.0);
        let w = mixture_weights(&t).unwrap();
        let leaves = t.leaves();
        let wa = w.values()[leaves.iter().position(|&l| l == a[1]).unwrap()];
        let wb = w.values()[leaves.iter().position(|&l| l == b[0]).unwrap()];
        assert!((wa - 0.8).abs() < 1e-15 && (wb - 0.2).abs() < 1e-15);
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_mixture() {
        let t = tree(-1.0, 1.0, 1);
        assert_eq!(mixture_weights(&t), Err(Error::DegenerateMixture));
        let mut t = tree(-1.0, 1.0, 1);
        put_weight(&mut t, NodeId::ROOT, 0.0);
        assert_eq!(mixture_weights(&t), Err(Error::DegenerateMixture));
    }

    #[test]
    fn select_examples() {
        let one = MixtureWeights::from_scores(vec![1.0]).unwrap();
        assert_eq!(one.select(0.01), 0);
        assert_eq!(one.select(1.0), 0);
        let two = MixtureWeights::from_scores(vec![0.5, 0.5]).unwrap();
        assert_eq!(two.select(0.3), 0);
        let three = MixtureWeights::from_scores(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(three.select(0.6), 2);
        let zero_first = MixtureWeights::from_scores(vec![0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..1000).all(|_| zero_first.sample(&mut rng) == 1));
    }
}
