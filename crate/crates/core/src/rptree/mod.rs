//! RPTree-Max and RPTree-Mean.
//!
//! A tree is an arena of [`TreeNode`]s over a shared [`Dataset`]. Every
//! internal node carries the [`SplitRecord`] that produced its children, so a
//! cell is the intersection of the half-spaces (or spherical shells, for
//! RPTree-Mean distance splits) along its root path.
//!
//! "Radius" of a cell always means the enclosing-ball radius of the cell's
//! data points, computed lazily and cached per node.

mod query;
mod split;

pub use query::{
    cell_contains_ball, collect_level_radii, levels_to_reduce, packing_count, reduction_from_levels,
    smallest_containing_cell, LevelRadii, Reduction,
};
pub use split::{
    estimate_cell_radius, jitter_half_width, split_cell, threshold_split, CellSplit, Cut, MeanBranch,
    SplitRecord,
};

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{meb_radius, Dataset};

/// Relative tolerance for cached cell radii. Tight enough that a child's
/// approximate radius never exceeds its parent's by more than ~1e-10·r.
pub const CELL_RADIUS_TOLERANCE: f64 = 1e-10;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildParams {
    pub rule: SplitRule,
    pub max_leaf_size: usize,
    pub max_depth: usize,
    pub degenerate_retries: usize,
    /// RPTree-Mean: split by projection when diameter² ≤ c · average
    /// squared interpoint distance, by distance to the mean otherwise.
    pub mean_rule_constant: f64,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            rule: SplitRule::Max,
            max_leaf_size: 10,
            max_depth: 64,
            degenerate_retries: 1000,
            mean_rule_constant: 2.0,
        }
    }
}

impl BuildParams {
    pub fn with_rule(rule: SplitRule) -> Self {
        BuildParams { rule, ..Self::default() }
    }
}

#[derive(Debug)]
pub struct TreeNode {
    pub point_indices: Vec<usize>,
    pub split: Option<SplitRecord>,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub parent: Option<NodeId>,
    pub depth: usize,
    /// Set when the node became a leaf because every split attempt was
    /// degenerate.
    pub degenerate: bool,
    radius: OnceLock<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn children(&self) -> impl Iterator<Item = NodeId> {
        self.left.into_iter().chain(self.right)
    }
}

#[derive(Debug)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    dataset: Arc<Dataset>,
    params: BuildParams,
    seed: u64,
}

pub const ROOT: NodeId = 0;

/// Builds a tree; identical `(dataset, params, seed)` give identical trees.
///
/// Recursion stops at `max_leaf_size` points, `max_depth`, a zero radius
/// estimate, or a degenerate split (flagged on the node).
pub fn build_tree(dataset: Arc<Dataset>, params: BuildParams, seed: u64) -> Result<Tree> {
    if dataset.is_empty() {
        return invalid("cannot build a tree over an empty dataset");
    }
    if params.max_leaf_size == 0 {
        return invalid("max_leaf_size must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = vec![TreeNode {
        point_indices: (0..dataset.len()).collect(),
        split: None,
        left: None,
        right: None,
        parent: None,
        depth: 0,
        degenerate: false,
        radius: OnceLock::new(),
    }];

    // Pre-order, left child first.
    let mut stack = vec![ROOT];
    while let Some(id) = stack.pop() {
        let node = &nodes[id];
        if node.point_indices.len() <= params.max_leaf_size || node.depth >= params.max_depth {
            continue;
        }
        let depth = node.depth;
        let outcome = split_cell(&dataset, &node.point_indices, &params, &mut rng);
        let CellSplit { record, left, right } = match outcome {
            Ok(s) => s,
            Err(Error::DegenerateSplit) => {
                nodes[id].degenerate = true;
                continue;
            }
            // Zero radius estimate: every point coincides.
            Err(Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(e),
        };
        let l = nodes.len();
        let r = l + 1;
        for (child, indices) in [(l, left), (r, right)] {
            debug_assert_eq!(child, nodes.len());
            nodes.push(TreeNode {
                point_indices: indices,
                split: None,
                left: None,
                right: None,
                parent: Some(id),
                depth: depth + 1,
                degenerate: false,
                radius: OnceLock::new(),
            });
        }
        let node = &mut nodes[id];
        node.split = Some(record);
        node.left = Some(l);
        node.right = Some(r);
        stack.push(r);
        stack.push(l);
    }

    Ok(Tree { nodes, dataset, params, seed })
}

impl Tree {
    pub fn root(&self) -> NodeId {
        ROOT
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Enclosing-ball radius of the node's data, cached after first use.
    pub fn data_radius(&self, id: NodeId) -> f64 {
        *self.nodes[id].radius.get_or_init(|| {
            let pts = self.dataset.select(&self.nodes[id].point_indices);
            meb_radius(&pts, CELL_RADIUS_TOLERANCE).map(|(_, r)| r).unwrap_or(0.0)
        })
    }

    /// Root-to-node path, root first.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Routes `x` through the split rules to the leaf whose cell holds it.
    pub fn locate(&self, x: &[f64]) -> NodeId {
        let mut cur = ROOT;
        while let Some(split) = &self.nodes[cur].split {
            let next = if split.goes_left(x) { self.nodes[cur].left } else { self.nodes[cur].right };
            cur = next.expect("internal node has both children");
        }
        cur
    }

    /// All nodes in the subtree of `id`, pre-order.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            let node = &self.nodes[n];
            stack.extend(node.right);
            stack.extend(node.left);
        }
        out
    }

    /// Debug dump. Each split is flattened to
    /// `[kind, median, jitter, threshold, radius_estimate, pivot, coords...]`
    /// where kind is 0 for a hyperplane (coords = direction) and 1 for a
    /// sphere (coords = center).
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                let split = n.split.as_ref().map(|s| {
                    let (kind, coords) = match &s.cut {
                        Cut::Hyperplane(v) => (0.0, v.0.clone()),
                        Cut::Sphere { center } => (1.0, center.clone()),
                    };
                    let mut arr =
                        vec![kind, s.median, s.jitter, s.threshold, s.radius_estimate, s.pivot_index as f64];
                    arr.extend(coords);
                    arr
                });
                serde_json::json!({
                    "id": id,
                    "parent": n.parent,
                    "depth": n.depth,
                    "size": n.point_indices.len(),
                    "degenerate": n.degenerate,
                    "split": split,
                })
            })
            .collect();
        serde_json::json!({
            "seed": self.seed,
            "params": self.params,
            "nodes": nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_dataset(n: usize, dim: usize, seed: u64) -> Arc<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Arc::new(Dataset::from_flat(dim, flat).unwrap())
    }

    #[test]
    fn small_dataset_is_single_leaf() {
        let tree = build_tree(random_dataset(5, 3, 1), BuildParams::default(), 7).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(tree.node(ROOT).is_leaf());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Arc::new(Dataset::new(2).unwrap());
        assert!(build_tree(ds, BuildParams::default(), 0).is_err());
    }

    #[test]
    fn identical_points_stop_splitting() {
        let ds = Arc::new(Dataset::from_rows(&vec![vec![1.0, 2.0]; 50]).unwrap());
        let tree = build_tree(ds, BuildParams::default(), 3).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.data_radius(ROOT), 0.0);
    }

    #[test]
    fn rebuild_is_identical() {
        let ds = random_dataset(1000, 2, 2);
        let a = build_tree(ds.clone(), BuildParams::default(), 99).unwrap();
        let b = build_tree(ds, BuildParams::default(), 99).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x.split, y.split);
            assert_eq!(x.point_indices, y.point_indices);
        }
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn leaves_partition_indices() {
        for rule in [SplitRule::Max, SplitRule::Mean] {
            let ds = random_dataset(500, 4, 5);
            let tree = build_tree(ds, BuildParams::with_rule(rule), 1).unwrap();
            let mut seen = vec![0u32; 500];
            for leaf in tree.leaves() {
                let node = tree.node(leaf);
                assert!(node.point_indices.len() <= 10 || node.degenerate);
                for &i in &node.point_indices {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            for (id, node) in tree.nodes().iter().enumerate() {
                if let (Some(l), Some(r)) = (node.left, node.right) {
                    assert_eq!(tree.node(l).depth, node.depth + 1);
                    assert_eq!(tree.node(l).parent, Some(id));
                    let mut kids = tree.node(l).point_indices.clone();
                    kids.extend(&tree.node(r).point_indices);
                    kids.sort_unstable();
                    let mut mine = node.point_indices.clone();
                    mine.sort_unstable();
                    assert_eq!(kids, mine);
                }
            }
        }
    }

    #[test]
    fn max_depth_caps_the_tree() {
        let params = BuildParams { max_depth: 3, ..BuildParams::default() };
        let tree = build_tree(random_dataset(400, 3, 8), params, 4).unwrap();
        assert_eq!(tree.max_depth(), 3);
    }

    #[test]
    fn data_points_locate_to_their_leaf() {
        let ds = random_dataset(300, 3, 9);
        let tree = build_tree(ds.clone(), BuildParams::default(), 2).unwrap();
        for leaf in tree.leaves() {
            for &i in &tree.node(leaf).point_indices {
                assert_eq!(tree.locate(ds.row(i)), leaf);
            }
        }
    }

    #[test]
    fn json_has_one_entry_per_node() {
        let tree = build_tree(random_dataset(100, 2, 1), BuildParams::default(), 1).unwrap();
        let v = tree.to_json();
        let nodes = v["nodes"].as_array().unwrap();
        assert_eq!(nodes.len(), tree.len());
        assert!(nodes[0]["parent"].is_null());
        let split = nodes[0]["split"].as_array().unwrap();
        assert_eq!(split.len(), 6 + 2);
    }
}
