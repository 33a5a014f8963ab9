//! K-dimensional tree pyramid: a full 2^K-ary tree of hypercube cells.
//!
//! Nodes live in an arena owned by [`TreePyramid`] and are addressed by
//! [`NodeId`]. Every node has either no children or exactly 2^K children, each
//! with half the parent radius, so the leaves always partition the root cell.
//!
//! Cell membership is resolved by descending from the root: at every internal
//! node a point goes to the upper child along dimension `d` when
//! `x[d] >= center[d]`. Cells are therefore half-open `[c - r, c + r)` per
//! dimension, except on the upper face of the domain, which is closed. Because
//! membership is defined by the descent itself, any point of the domain
//! belongs to exactly one leaf regardless of floating point rounding in the
//! stored centers.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Default cap on the tree depth.
pub const DEFAULT_MAX_DEPTH: u32 = 64;

/// Axis-aligned box `[min, max]` that bounds the sampling domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBounds {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl DomainBounds {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        if min.is_empty() {
            return Err(Error::InvalidConfig("bounds need at least one dimension".into()));
        }
        for (dim, (&lo, &hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds { dim, min: lo, max: hi });
            }
        }
        Ok(Self { min, max })
    }

    /// The cube `[lo, hi]^dims`.
    pub fn cube(lo: f64, hi: f64, dims: usize) -> Result<Self> {
        Self::new(vec![lo; dims], vec![hi; dims])
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(lo, hi)| hi - lo).product()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x
                .iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

/// Index of a node inside its [`TreePyramid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

/// A sample drawn from a node's proposal component together with its
/// target density and importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafSample {
    pub point: Vec<f64>,
    pub target_density: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    center: Vec<f64>,
    radius: f64,
    level: u32,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    sample: Option<LeafSample>,
}

impl Node {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Half-width of the cell, shared by all dimensions.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn sample(&self) -> Option<&LeafSample> {
        self.sample.as_ref()
    }

    pub fn weight(&self) -> Option<f64> {
        self.sample.as_ref().map(|s| s.weight)
    }

    /// Cell volume `(2r)^K`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.radius).powi(self.center.len() as i32)
    }
}

#[derive(Debug, Clone)]
pub struct TreePyramid {
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
    bounds: DomainBounds,
    max_depth: u32,
}

impl TreePyramid {
    /// Single-leaf tree whose root cell is the domain. The domain must be a
    /// hypercube since every node carries one scalar radius.
    pub fn new(bounds: DomainBounds) -> Result<Self> {
        Self::with_max_depth(bounds, DEFAULT_MAX_DEPTH)
    }

    pub fn with_max_depth(bounds: DomainBounds, max_depth: u32) -> Result<Self> {
        let expected = bounds.max[0] - bounds.min[0];
        for dim in 1..bounds.dims() {
            let extent = bounds.max[dim] - bounds.min[dim];
            if (extent - expected).abs() > 1e-12 * expected.abs() {
                return Err(Error::NonCubicBounds { dim, extent, expected });
            }
        }
        let center = bounds
            .min
            .iter()
            .zip(&bounds.max)
            .map(|(lo, hi)| (hi + lo) / 2.0)
            .collect();
        let radius = expected.abs() / 2.0;
        let root = Node {
            center,
            radius,
            level: 0,
            parent: None,
            children: Vec::new(),
            sample: None,
        };
        Ok(Self {
            nodes: vec![root],
            leaves: vec![NodeId::ROOT],
            bounds,
            max_depth,
        })
    }

    pub fn dims(&self) -> usize {
        self.bounds.dims()
    }

    pub fn bounds(&self) -> &DomainBounds {
        &self.bounds
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    /// Every node ever created, in creation order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Current leaves in insertion order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn set_sample(&mut self, id: NodeId, sample: LeafSample) {
        self.nodes[id.0].sample = Some(sample);
    }

    pub fn set_weight(&mut self, id: NodeId, weight: f64) {
        if let Some(s) = self.nodes[id.0].sample.as_mut() {
            s.weight = weight;
        }
    }

    /// Splits leaf `id` into its 2^K children and returns their ids.
    ///
    /// Child `k` takes the sign `+` in dimension `d` when bit `K - 1 - d` of
    /// `k` is clear, so children are ordered lexicographically over the sign
    /// pattern with `+` first and the first dimension most significant. The
    /// expanded node leaves the leaf index and the children are appended to
    /// its end.
    pub fn expand(&mut self, id: NodeId) -> Result<Vec<NodeId>> {
        let node = &self.nodes[id.0];
        if !node.is_leaf() {
            return Err(Error::NotALeaf(id.0));
        }
        if node.level >= self.max_depth {
            return Err(Error::DepthLimit(self.max_depth));
        }
        let dims = self.dims();
        let half = node.radius / 2.0;
        let level = node.level + 1;
        let parent_center = node.center.clone();

        let first = self.nodes.len();
        let count = 1usize << dims;
        for k in 0..count {
            let center = parent_center
                .iter()
                .enumerate()
                .map(|(d, &c)| {
                    if (k >> (dims - 1 - d)) & 1 == 0 {
                        c + half
                    } else {
                        c - half
                    }
                })
                .collect();
            self.nodes.push(Node {
                center,
                radius: half,
                level,
                parent: Some(id),
                children: Vec::new(),
                sample: None,
            });
        }
        let children: Vec<NodeId> = (first..first + count).map(NodeId).collect();
        self.nodes[id.0].children = children.clone();

        let pos = self
            .leaves
            .iter()
            .position(|&l| l == id)
            .expect("leaf index out of sync");
        self.leaves.remove(pos);
        self.leaves.extend_from_slice(&children);
        Ok(children)
    }

    /// The leaf whose cell contains `x`, or `None` outside the domain.
    pub fn locate(&self, x: &[f64]) -> Option<NodeId> {
        if !self.bounds.contains(x) {
            return None;
        }
        let dims = self.dims();
        let mut id = NodeId::ROOT;
        loop {
            let node = &self.nodes[id.0];
            if node.is_leaf() {
                return Some(id);
            }
            let k = node
                .center
                .iter()
                .zip(x)
                .enumerate()
                .fold(0usize, |k, (d, (&c, &v))| {
                    if v < c {
                        k | (1 << (dims - 1 - d))
                    } else {
                        k
                    }
                });
            id = node.children[k];
        }
    }

    /// Whether `x` lies in the cell of node `id` (leaf or internal).
    pub fn cell_contains(&self, id: NodeId, x: &[f64]) -> bool {
        let mut cur = self.locate(x);
        while let Some(n) = cur {
            if n == id {
                return true;
            }
            cur = self.nodes[n.0].parent;
        }
        false
    }

    /// Line-oriented dump in depth-first pre-order, one node per line:
    /// `level<TAB>center<TAB>radius<TAB>weight<TAB>sample`, coordinates
    /// separated by single spaces and undefined values written as `-`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![NodeId::ROOT];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id.0];
            let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
            let (weight, sample) = match &n.sample {
                Some(s) => (s.weight.to_string(), join(&s.point)),
                None => ("-".to_string(), "-".to_string()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                n.level,
                join(&n.center),
                n.radius,
                weight,
                sample
            );
            stack.extend(n.children.iter().rev());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(lo: f64, hi: f64, dims: usize) -> TreePyramid {
        TreePyramid::new(DomainBounds::cube(lo, hi, dims).unwrap()).unwrap()
    }

    #[test]
    fn root_from_bounds() {
        let t = tree(-1.0, 1.0, 1);
        assert_eq!(t.root().center(), &[0.0]);
        assert_eq!(t.root().radius(), 1.0);

        let t = tree(-1.0, 1.0, 2);
        assert_eq!(t.root().center(), &[0.0, 0.0]);
        assert_eq!(t.root().radius(), 1.0);
        assert_eq!(t.leaf_count(), 1);
        assert!(t.root().sample().is_none());

        let t = tree(0.0, 4.0, 1);
        assert_eq!(t.root().center(), &[2.0]);
        assert_eq!(t.root().radius(), 2.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(matches!(
            DomainBounds::new(vec![1.0], vec![1.0]),
            Err(Error::InvalidBounds { dim: 0, .. })
        ));
        assert!(matches!(
            DomainBounds::new(vec![0.0, 2.0], vec![1.0, 1.0]),
            Err(Error::InvalidBounds { dim: 1, .. })
        ));
        let rect = DomainBounds::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            TreePyramid::new(rect),
            Err(Error::NonCubicBounds { dim: 1, .. })
        ));
    }

    #[test]
    fn expand_1d() {
        let mut t = tree(-1.0, 1.0, 1);
        let kids = t.expand(NodeId::ROOT).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(t.node(kids[0]).center(), &[0.5]);
        assert_eq!(t.node(kids[1]).center(), &[-0.5]);
        assert!(kids.iter().all(|&k| t.node(k).radius() == 0.5));
        assert!(kids.iter().all(|&k| t.node(k).sample().is_none()));
        assert_eq!(t.leaves(), kids.as_slice());
    }

    #[test]
    fn expand_2d_sign_order() {
        let mut t = tree(-1.0, 1.0, 2);
        let kids = t.expand(NodeId::ROOT).unwrap();
        let centers: Vec<&[f64]> = kids.iter().map(|&k| t.node(k).center()).collect();
        assert_eq!(
            centers,
            vec![&[0.5, 0.5][..], &[0.5, -0.5], &[-0.5, 0.5], &[-0.5, -0.5]]
        );
    }

    #[test]
    fn expand_3d_enumerates_signs() {
        let mut t = tree(-0.5, 0.5, 3);
        let kids = t.expand(NodeId::ROOT).unwrap();
        assert_eq!(kids.len(), 8);
        // Independent enumeration of {+0.25, -0.25}^3.
        let mut expected = Vec::new();
        for a in [0.25, -0.25] {
            for b in [0.25, -0.25] {
                for c in [0.25, -0.25] {
                    expected.push(vec![a, b, c]);
                }
            }
        }
        let got: Vec<Vec<f64>> = kids.iter().map(|&k| t.node(k).center().to_vec()).collect();
        assert_eq!(got, expected);
        assert!(kids.iter().all(|&k| t.node(k).radius() == 0.25));
    }

    #[test]
    fn expanding_internal_node_fails() {
        let mut t = tree(-1.0, 1.0, 1);
        t.expand(NodeId::ROOT).unwrap();
        assert_eq!(t.expand(NodeId::ROOT), Err(Error::NotALeaf(0)));
    }

    #[test]
    fn leaf_counts() {
        let mut t = tree(-1.0, 1.0, 2);
        assert_eq!(t.leaves(), &[NodeId::ROOT]);
        let kids = t.expand(NodeId::ROOT).unwrap();
        t.expand(kids[1]).unwrap();
        assert_eq!(t.leaf_count(), 7);
        assert!(t.leaves().iter().all(|&l| t.node(l).is_leaf()));
        // insertion order: surviving first-level children, then the new ones
        assert_eq!(&t.leaves()[..3], &[kids[0], kids[2], kids[3]]);
    }

    #[test]
    fn depth_cap() {
        let mut t = TreePyramid::with_max_depth(DomainBounds::cube(0.0, 1.0, 1).unwrap(), 2).unwrap();
        let a = t.expand(NodeId::ROOT).unwrap();
        let b = t.expand(a[0]).unwrap();
        assert_eq!(t.expand(b[0]), Err(Error::DepthLimit(2)));
    }

    #[test]
    fn boundary_membership() {
        let mut t = tree(-1.0, 1.0, 1);
        let kids = t.expand(NodeId::ROOT).unwrap();
        // split point belongs to the upper cell, upper face is closed
        assert_eq!(t.locate(&[0.0]), Some(kids[0]));
        assert_eq!(t.locate(&[1.0]), Some(kids[0]));
        assert_eq!(t.locate(&[-1.0]), Some(kids[1]));
        assert_eq!(t.locate(&[1.0 + 1e-12]), None);
        assert!(t.cell_contains(NodeId::ROOT, &[0.3]));
        assert!(!t.cell_contains(kids[1], &[0.3]));
    }

    #[test]
    fn text_dump() {
        let mut t = tree(-1.0, 1.0, 1);
        let kids = t.expand(NodeId::ROOT).unwrap();
        t.set_sample(
            kids[0],
            LeafSample {
                point: vec![0.75],
                target_density: 0.2,
                weight: 0.2,
            },
        );
        let golden = "0\t0\t1\t-\t-\n1\t0.5\t0.5\t0.2\t0.75\n1\t-0.5\t0.5\t-\t-\n";
        assert_eq!(t.to_text(), golden);
    }
}
