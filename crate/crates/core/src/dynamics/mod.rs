//! Endomorphisms with enumerated, labeled inverse branches.
//!
//! A [`BranchSystem`] is an onto, finite-to-one map `r` together with a fixed
//! ordering of the solutions of `r(y) = x`. The ordering is part of the
//! contract: label paths are the canonical identity of a backward orbit, so
//! every family documents how it numbers its branches.

mod circle;
mod julia;
mod subshift;

pub use circle::{Circle, CirclePoint};
pub use julia::QuadraticJulia;
pub use subshift::{Subshift, Word};

use std::fmt::Debug;

use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Default cap on the number of leaves of a preimage tree.
pub const DEFAULT_NODE_BUDGET: u64 = 1 << 24;

/// One solution `y` of `r(y) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage<P> {
    pub label: usize,
    pub point: P,
    /// 1 except where branches coincide (the Julia critical value), where the
    /// single point stands for two equal branches.
    pub multiplicity: u32,
}

impl<P> Preimage<P> {
    pub fn simple(label: usize, point: P) -> Self {
        Preimage { label, point, multiplicity: 1 }
    }
}

pub trait BranchSystem: Clone + Debug + Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync;

    /// Short family name used in diagnostics.
    fn family(&self) -> &'static str;

    /// Upper bound on the branch count over all points.
    fn degree(&self) -> usize;

    fn validate(&self, x: &Self::Point) -> Result<()>;

    /// `r(x)`.
    fn forward(&self, x: &Self::Point) -> Result<Self::Point>;

    /// All solutions of `r(y) = x` in the family's documented label order.
    fn preimages(&self, x: &Self::Point) -> Result<Vec<Preimage<Self::Point>>>;

    /// `𝔠(x)`, counting multiplicity.
    fn branch_count(&self, x: &Self::Point) -> Result<usize> {
        Ok(self.preimages(x)?.iter().map(|p| p.multiplicity as usize).sum())
    }

    /// `𝔠` when it does not depend on the point.
    fn constant_branch_count(&self) -> Option<usize> {
        None
    }

    /// Whether two points agree (exactly, or to the family's round-trip tolerance).
    fn same_point(&self, a: &Self::Point, b: &Self::Point) -> bool {
        a == b
    }

    /// Points spread over the state space, for sampled identity checks.
    fn sample_points(&self, count: usize, rng: &mut ChaCha20Rng) -> Vec<Self::Point>;

    /// A deterministic uniform grid, where the family has one.
    fn grid_points(&self, _count: usize) -> Vec<Self::Point> {
        Vec::new()
    }
}

/// A leaf of a preimage tree: `rⁿ(point) = root`, reached along `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<P> {
    pub labels: Vec<usize>,
    pub point: P,
    /// Product of branch multiplicities along the path.
    pub multiplicity: u64,
}

pub(crate) fn check_budget(degree: usize, depth: usize, budget: u64) -> Result<()> {
    let nodes = (degree as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if nodes > budget as u128 {
        return Err(Error::BudgetExceeded { nodes, budget });
    }
    Ok(())
}

/// All `y` with `rⁿ(y) = x`, with their label paths in lexicographic order.
pub fn preimage_tree<D: BranchSystem>(
    sys: &D,
    x: &D::Point,
    depth: usize,
    budget: u64,
) -> Result<Vec<TreeNode<D::Point>>> {
    check_budget(sys.degree(), depth, budget)?;
    sys.validate(x)?;
    let mut level = vec![TreeNode { labels: Vec::new(), point: x.clone(), multiplicity: 1 }];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * sys.degree());
        for node in &level {
            for pre in sys.preimages(&node.point)? {
                let mut labels = Vec::with_capacity(node.labels.len() + 1);
                labels.extend_from_slice(&node.labels);
                labels.push(pre.label);
                next.push(TreeNode {
                    labels,
                    point: pre.point,
                    multiplicity: node.multiplicity * pre.multiplicity as u64,
                });
            }
        }
        level = next;
    }
    Ok(level)
}

/// `rⁿ(x)`.
pub fn forward_n<D: BranchSystem>(sys: &D, x: &D::Point, n: usize) -> Result<D::Point> {
    let mut y = x.clone();
    for _ in 0..n {
        y = sys.forward(&y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn depth_zero_tree_is_the_root() {
        let sys = Circle::new(3).unwrap();
        let x = CirclePoint::rational(1, 7).unwrap();
        let tree = preimage_tree(&sys, &x, 0, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(tree, vec![TreeNode { labels: vec![], point: x, multiplicity: 1 }]);
    }

    #[test]
    fn circle_depth_two_tree() {
        let sys = Circle::new(2).unwrap();
        let tree = preimage_tree(&sys, &CirclePoint::zero(), 2, DEFAULT_NODE_BUDGET).unwrap();
        let labels: Vec<_> = tree.iter().map(|n| n.labels.clone()).collect();
        assert_eq!(labels, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let pts: Vec<_> = tree.iter().map(|n| n.point.clone()).collect();
        let expect: Vec<_> = [(0, 1), (1, 2), (1, 4), (3, 4)]
            .iter()
            .map(|&(p, q)| CirclePoint::rational(p, q).unwrap())
            .collect();
        assert_eq!(pts, expect);
    }

    #[test]
    fn golden_mean_depth_two_tree() {
        let sys = Subshift::golden_mean();
        let x = Word::new(vec![1, 0]);
        let tree = preimage_tree(&sys, &x, 2, DEFAULT_NODE_BUDGET).unwrap();
        let words: Vec<_> = tree.iter().map(|n| n.point.symbols().to_vec()).collect();
        assert_eq!(words, vec![vec![0, 0, 1, 0], vec![1, 0, 1, 0]]);
    }

    #[test]
    fn budget_is_enforced() {
        let sys = Circle::new(2).unwrap();
        let err = preimage_tree(&sys, &CirclePoint::zero(), 11, 1024).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { nodes: 2048, budget: 1024 }));
    }

    fn composed<D: BranchSystem>(sys: &D, x: &D::Point, m: usize, n: usize) {
        let direct = preimage_tree(sys, x, m + n, DEFAULT_NODE_BUDGET).unwrap();
        let mut via = Vec::new();
        for mid in preimage_tree(sys, x, m, DEFAULT_NODE_BUDGET).unwrap() {
            for leaf in preimage_tree(sys, &mid.point, n, DEFAULT_NODE_BUDGET).unwrap() {
                let mut labels = mid.labels.clone();
                labels.extend(leaf.labels);
                via.push(TreeNode {
                    labels,
                    point: leaf.point,
                    multiplicity: mid.multiplicity * leaf.multiplicity,
                });
            }
        }
        assert_eq!(direct.len(), via.len());
        for (a, b) in direct.iter().zip(&via) {
            assert_eq!(a.labels, b.labels);
            assert!(sys.same_point(&a.point, &b.point));
        }
    }

    #[test]
    fn tree_composition_all_families() {
        let mut g = rng::stream(11, 0);
        let circle = Circle::new(3).unwrap();
        for x in circle.sample_points(5, &mut g) {
            composed(&circle, &x, 2, 3);
        }
        let shift = Subshift::golden_mean();
        for x in shift.sample_points(5, &mut g) {
            composed(&shift, &x, 3, 2);
        }
        let julia = QuadraticJulia::new(num_complex::Complex64::new(-0.12, 0.75));
        for x in julia.sample_points(5, &mut g) {
            composed(&julia, &x, 2, 2);
        }
    }
}
