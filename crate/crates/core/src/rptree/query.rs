use serde::{Deserialize, Serialize};

use super::{NodeId, Tree, ROOT};
use crate::error::{invalid, Result};
use crate::math::Ball;

/// Whether `ball` lies inside the cell of `node`, i.e. inside every ancestor
/// constraint on the root path. The root cell is all of ℝ^D.
pub fn cell_contains_ball(tree: &Tree, node: NodeId, ball: &Ball) -> bool {
    let path = tree.path_to(node);
    path.windows(2).all(|w| edge_contains(tree, w[0], w[1], ball))
}

fn edge_contains(tree: &Tree, parent: NodeId, child: NodeId, ball: &Ball) -> bool {
    let p = tree.node(parent);
    let split = p.split.as_ref().expect("parent of a node is internal");
    let (lo, hi) = split.cut.ball_range(&ball.center, ball.radius);
    if p.left == Some(child) {
        hi < split.threshold
    } else {
        lo >= split.threshold
    }
}

/// Deepest node whose cell contains `ball`. Containment is inherited by
/// ancestors, so the candidates form a root path and a greedy descent finds
/// its end.
pub fn smallest_containing_cell(tree: &Tree, ball: &Ball) -> NodeId {
    let mut cur = ROOT;
    loop {
        let node = tree.node(cur);
        let next = node.children().find(|&c| edge_contains(tree, cur, c, ball));
        match next {
            Some(c) => cur = c,
            None => return cur,
        }
    }
}

/// Number of disjoint cells with data radius > `r` that hold a data point
/// inside `ball`.
///
/// The qualifying predicate is upward closed, so the largest antichain of
/// qualifying nodes is the set of qualifying nodes with no qualifying child.
pub fn packing_count(tree: &Tree, ball: &Ball, r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return invalid(format!("packing scale r must be positive, got {r}"));
    }
    let qualifies = |id: NodeId| {
        let node = tree.node(id);
        let ds = tree.dataset();
        node.point_indices.iter().any(|&i| ball.contains(ds.row(i))) && tree.data_radius(id) > r
    };
    if !qualifies(ROOT) {
        return Ok(0);
    }
    let mut count = 0;
    let mut stack = vec![ROOT];
    while let Some(id) = stack.pop() {
        let before = stack.len();
        stack.extend(tree.node(id).children().filter(|&c| qualifies(c)));
        if stack.len() == before {
            count += 1;
        }
    }
    Ok(count)
}

/// One row of [`collect_level_radii`]. `level` is relative to the queried node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRadii {
    pub level: usize,
    /// Max over nodes at this level and leaves above it.
    pub max_radius: f64,
    /// Mean over nodes at exactly this level.
    pub mean_radius: f64,
    pub nodes: usize,
}

/// Per-level radius aggregates below `node`. Leaves carry their radius down
/// to every deeper level for the max.
pub fn collect_level_radii(tree: &Tree, node: NodeId) -> Vec<LevelRadii> {
    let mut rows = Vec::new();
    let mut frontier = vec![node];
    let mut carried = f64::NEG_INFINITY;
    let mut level = 0;
    while !frontier.is_empty() {
        let radii: Vec<f64> = frontier.iter().map(|&id| tree.data_radius(id)).collect();
        let level_max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rows.push(LevelRadii {
            level,
            max_radius: level_max.max(carried),
            mean_radius: radii.iter().sum::<f64>() / radii.len() as f64,
            nodes: radii.len(),
        });
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (&id, &rad) in frontier.iter().zip(&radii) {
            let n = tree.node(id);
            if n.is_leaf() {
                carried = carried.max(rad);
            } else {
                next.extend(n.children());
            }
        }
        frontier = next;
        level += 1;
    }
    rows
}

/// Outcome of [`levels_to_reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    Levels(usize),
    /// Some leaf below the node is still larger than the target radius.
    Censored,
}

impl Reduction {
    pub fn levels(self) -> Option<usize> {
        match self {
            Reduction::Levels(l) => Some(l),
            Reduction::Censored => None,
        }
    }
}

/// Smallest ℓ such that every descendant at least ℓ levels below `node`
/// (and every leaf above that level) has radius ≤ radius(node)/s.
pub fn levels_to_reduce(tree: &Tree, node: NodeId, s: f64) -> Result<Reduction> {
    if !(s >= 1.0) {
        return invalid(format!("reduction factor must be ≥ 1, got {s}"));
    }
    let radius = tree.data_radius(node);
    if !(radius > 0.0) {
        return invalid("node has zero data radius");
    }
    Ok(reduction_from_levels(&collect_level_radii(tree, node), radius / s))
}

/// Relative slack when comparing cached radii with a target, absorbing the
/// enclosing-ball approximation error.
const RADIUS_SLACK: f64 = 1e-9;

/// Reads a [`Reduction`] off a level table for the given target radius.
pub fn reduction_from_levels(rows: &[LevelRadii], target: f64) -> Reduction {
    let within = |r: f64| r <= target * (1.0 + RADIUS_SLACK);
    match rows.last() {
        Some(last) if !within(last.max_radius) => return Reduction::Censored,
        None => return Reduction::Levels(0),
        _ => {}
    }
    let mut level = rows.len() - 1;
    while level > 0 && within(rows[level - 1].max_radius) {
        level -= 1;
    }
    Reduction::Levels(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Dataset;
    use crate::rptree::{build_tree, BuildParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn tree(n: usize, dim: usize, seed: u64) -> Tree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ds = Arc::new(Dataset::from_flat(dim, flat).unwrap());
        build_tree(ds, BuildParams::default(), seed).unwrap()
    }

    /// Hand-built one-split tree on the line x = 0 with points at ±2.
    fn one_split() -> Tree {
        use crate::math::Direction;
        use crate::rptree::{Cut, SplitRecord, TreeNode};
        use std::sync::OnceLock;
        let ds = Arc::new(Dataset::from_rows(&[vec![-2.0, 0.0], vec![2.0, 0.0]]).unwrap());
        let leaf = |idx: Vec<usize>| TreeNode {
            point_indices: idx,
            split: None,
            left: None,
            right: None,
            parent: Some(0),
            depth: 1,
            degenerate: false,
            radius: OnceLock::new(),
        };
        let root = TreeNode {
            point_indices: vec![0, 1],
            split: Some(SplitRecord {
                cut: Cut::Hyperplane(Direction(vec![1.0, 0.0])),
                median: 1.0,
                jitter: 0.0,
                threshold: 1.0,
                radius_estimate: 4.0,
                pivot_index: 0,
                branch: None,
            }),
            left: Some(1),
            right: Some(2),
            parent: None,
            depth: 0,
            degenerate: false,
            radius: OnceLock::new(),
        };
        Tree { nodes: vec![root, leaf(vec![0]), leaf(vec![1])], dataset: ds, params: BuildParams::default(), seed: 0 }
    }

    #[test]
    fn containment_examples() {
        let t = one_split();
        let b = |r| Ball::new(vec![0.0, 0.0], r).unwrap();
        assert!(cell_contains_ball(&t, ROOT, &b(1e9)));
        assert!(cell_contains_ball(&t, 1, &b(0.5)));
        assert!(!cell_contains_ball(&t, 1, &b(1.2)));
        assert!(!cell_contains_ball(&t, 2, &b(0.5)));
        // Boundary: ball touching θ from the right counts as inside the right cell.
        let touching = Ball::new(vec![2.0, 0.0], 1.0).unwrap();
        assert!(cell_contains_ball(&t, 2, &touching));
        assert_eq!(smallest_containing_cell(&t, &b(0.5)), 1);
        assert_eq!(smallest_containing_cell(&t, &b(1.2)), ROOT);
    }

    #[test]
    fn smallest_cell_of_zero_ball_is_its_leaf() {
        let t = tree(400, 3, 4);
        for i in (0..400).step_by(37) {
            let p = t.dataset().row(i).to_vec();
            let leaf = t.locate(&p);
            assert_eq!(smallest_containing_cell(&t, &Ball::new(p, 0.0).unwrap()), leaf);
        }
        let huge = Ball::new(vec![0.0; 3], 1e6).unwrap();
        assert_eq!(smallest_containing_cell(&t, &huge), ROOT);
    }

    #[test]
    fn packing_trivial_cases() {
        let t = tree(300, 2, 6);
        let root_r = t.data_radius(ROOT);
        let ball = Ball::new(vec![0.0, 0.0], 0.5).unwrap();
        assert_eq!(packing_count(&t, &ball, root_r).unwrap(), 0);
        let far = Ball::new(vec![50.0, 50.0], 1.0).unwrap();
        assert_eq!(packing_count(&t, &far, 1e-3).unwrap(), 0);
        assert!(packing_count(&t, &ball, 0.0).is_err());
        assert!(packing_count(&t, &ball, root_r / 4.0).unwrap() >= 1);
    }

    #[test]
    fn level_table_basics() {
        let single = tree(5, 2, 1);
        let rows = collect_level_radii(&single, ROOT);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].level, 0);
        assert_eq!(levels_to_reduce(&single, ROOT, 1.0).unwrap(), Reduction::Levels(0));

        let t = one_split();
        let rows = collect_level_radii(&t, ROOT);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].max_radius, 0.0);
        assert_eq!(rows[1].nodes, 2);
        assert_eq!(levels_to_reduce(&t, ROOT, 4.0).unwrap(), Reduction::Levels(1));
        assert!(levels_to_reduce(&t, 1, 2.0).is_err());
        assert!(levels_to_reduce(&t, ROOT, 0.5).is_err());
    }

    #[test]
    fn halving_chain_needs_two_levels_for_factor_four() {
        let rows: Vec<LevelRadii> = [8.0, 4.0, 2.0, 1.0]
            .iter()
            .enumerate()
            .map(|(level, &r)| LevelRadii { level, max_radius: r, mean_radius: r, nodes: 1 })
            .collect();
        assert_eq!(reduction_from_levels(&rows, 8.0 / 4.0), Reduction::Levels(2));
        assert_eq!(reduction_from_levels(&rows, 8.0 / 16.0), Reduction::Censored);
    }
}
