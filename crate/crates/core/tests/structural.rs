//! Structural invariants of built trees, checked against brute-force oracles
//! on randomized small instances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rptlab_core::math::dist;
use rptlab_core::rptree::{
    cell_contains_ball, jitter_half_width, packing_count, smallest_containing_cell, NodeId, Cut,
};
use rptlab_core::{build_tree, Ball, BuildParams, Dataset, SplitRule, Tree};

const INSTANCES: u64 = 100;

fn random_instance(seed: u64, n: usize) -> (Tree, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(2..=8);
    let intrinsic = rng.random_range(1..=dim);
    let basis: Vec<Vec<f64>> = (0..intrinsic).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut x = vec![0.0; dim];
            for b in &basis {
                let c: f64 = rng.random_range(-1.0..1.0);
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
            }
            x
        })
        .collect();
    // A few exact duplicates exercise tie handling.
    for _ in 0..rng.random_range(0..4) {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        rows[i] = rows[j].clone();
    }
    let params = BuildParams {
        rule: if seed.is_multiple_of(2) { SplitRule::Max } else { SplitRule::Mean },
        max_leaf_size: rng.random_range(1..=4),
        ..BuildParams::default()
    };
    let ds = Arc::new(Dataset::from_rows(&rows).unwrap());
    (build_tree(ds, params, seed).unwrap(), rng)
}

pub fn check_leaves_partition_the_data() {
    for seed in 0..INSTANCES {
        let (tree, _) = random_instance(seed, 50);
        let mut seen = vec![0usize; tree.dataset().len()];
        for leaf in tree.leaves() {
            for &i in &tree.node(leaf).point_indices {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "seed {seed}");
        for (id, node) in tree.nodes().iter().enumerate() {
            let Some(split) = &node.split else { continue };
            let (l, r) = (node.left.unwrap(), node.right.unwrap());
            let mut joined: Vec<usize> =
                tree.node(l).point_indices.iter().chain(&tree.node(r).point_indices).copied().collect();
            joined.sort_unstable();
            let mut own = node.point_indices.clone();
            own.sort_unstable();
            assert_eq!(joined, own, "seed {seed} node {id}");
            let ds = tree.dataset();
            assert!(tree.node(l).point_indices.iter().all(|&i| split.goes_left(ds.row(i))));
            assert!(tree.node(r).point_indices.iter().all(|&i| !split.goes_left(ds.row(i))));
        }
    }
}

pub fn check_child_radius_never_exceeds_parent() {
    for seed in 0..INSTANCES {
        let (tree, _) = random_instance(seed, 50);
        for (id, node) in tree.nodes().iter().enumerate() {
            for c in node.children() {
                assert!(tree.data_radius(c) <= tree.data_radius(id) * (1.0 + 1e-9), "seed {seed} node {id}");
            }
        }
    }
}

pub fn check_thresholds_are_median_plus_jitter_within_range() {
    for seed in 0..INSTANCES {
        let (tree, _) = random_instance(seed, 50);
        let dim = tree.dataset().dim();
        for node in tree.nodes() {
            let Some(split) = &node.split else { continue };
            assert_eq!(split.threshold, split.median + split.jitter);
            match tree.params().rule {
                SplitRule::Max => {
                    assert!(matches!(split.cut, Cut::Hyperplane(_)));
                    assert!(split.jitter.abs() <= jitter_half_width(split.radius_estimate, dim));
                }
                SplitRule::Mean => assert_eq!(split.jitter, 0.0),
            }
        }
    }
}

pub fn check_builds_are_deterministic() {
    for seed in 0..INSTANCES {
        let (a, _) = random_instance(seed, 50);
        let (b, _) = random_instance(seed, 50);
        assert_eq!(a.to_json(), b.to_json(), "seed {seed}");
    }
}

/// Largest antichain of qualifying nodes by dynamic programming over the tree.
fn antichain_oracle(tree: &Tree, id: NodeId, qualifies: &dyn Fn(NodeId) -> bool) -> usize {
    let below: usize = tree.node(id).children().map(|c| antichain_oracle(tree, c, qualifies)).sum();
    below.max(usize::from(qualifies(id)))
}

pub fn check_packing_count_matches_antichain_oracle() {
    for seed in 0..INSTANCES {
        let (tree, mut rng) = random_instance(seed, 64);
        let ds = tree.dataset();
        let root_r = tree.data_radius(0);
        for _ in 0..5 {
            let center = ds.row(rng.random_range(0..ds.len())).to_vec();
            let big_r = root_r * rng.random_range(0.05..1.0);
            let r = root_r * rng.random_range(0.01..0.5);
            let ball = Ball::new(center.clone(), big_r).unwrap();
            let qualifies = |id: NodeId| {
                tree.node(id).point_indices.iter().any(|&i| dist(ds.row(i), &center) <= big_r)
                    && tree.data_radius(id) > r
            };
            let want = antichain_oracle(&tree, 0, &qualifies);
            assert_eq!(packing_count(&tree, &ball, r).unwrap(), want, "seed {seed}");
        }
    }
}

pub fn check_smallest_containing_cell_matches_scan() {
    for seed in 0..INSTANCES {
        let (tree, mut rng) = random_instance(seed, 50);
        let ds = tree.dataset();
        let root_r = tree.data_radius(0);
        for _ in 0..10 {
            let center: Vec<f64> = ds.row(rng.random_range(0..ds.len())).iter().map(|x| x + rng.random_range(-0.05..0.05)).collect();
            let ball = Ball::new(center, root_r * rng.random_range(0.0..0.3)).unwrap();
            let scan = (0..tree.len())
                .filter(|&id| cell_contains_ball(&tree, id, &ball))
                .max_by_key(|&id| tree.node(id).depth)
                .unwrap();
            assert_eq!(smallest_containing_cell(&tree, &ball), scan, "seed {seed}");
        }
    }
}

/// Every check, by name; also run from the harness acceptance suite.
#[allow(dead_code)]
pub const CHECKS: &[(&str, fn())] = &[
    ("leaves_partition_the_data", check_leaves_partition_the_data),
    ("child_radius_never_exceeds_parent", check_child_radius_never_exceeds_parent),
    ("thresholds_are_median_plus_jitter_within_range", check_thresholds_are_median_plus_jitter_within_range),
    ("builds_are_deterministic", check_builds_are_deterministic),
    ("packing_count_matches_antichain_oracle", check_packing_count_matches_antichain_oracle),
    ("smallest_containing_cell_matches_scan", check_smallest_containing_cell_matches_scan),
];

#[test]
fn leaves_partition_the_data() {
    check_leaves_partition_the_data();
}

#[test]
fn child_radius_never_exceeds_parent() {
    check_child_radius_never_exceeds_parent();
}

#[test]
fn thresholds_are_median_plus_jitter_within_range() {
    check_thresholds_are_median_plus_jitter_within_range();
}

#[test]
fn builds_are_deterministic() {
    check_builds_are_deterministic();
}

#[test]
fn packing_count_matches_antichain_oracle() {
    check_packing_count_matches_antichain_oracle();
}

#[test]
fn smallest_containing_cell_matches_scan() {
    check_smallest_containing_cell_matches_scan();
}
