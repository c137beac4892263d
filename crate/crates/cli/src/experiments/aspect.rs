use rand::Rng;
use rptlab_core::rptree::{smallest_containing_cell, ROOT};
use rptlab_core::{build_tree, Ball};

use super::{tree_rng, Context, Job, Row};

pub const COLUMNS: &[&str] =
    &["d", "D", "R", "center_index", "cell_depth", "cell_size", "cell_radius", "is_leaf", "ratio"];

/// Radius of the smallest cell containing a small ball, relative to the ball.
pub fn run(ctx: &Context, job: &Job, d: usize, dim: usize) -> anyhow::Result<Vec<Row>> {
    let ds = ctx.dataset(d, dim)?;
    let tree = build_tree(ds, ctx.cfg.build_params(), job.seed)?;
    let mut rng = tree_rng(job.seed);
    let ds = tree.dataset();
    let center_index = rng.random_range(0..ds.len());
    let big_r = ctx.cfg.grid.aspect_ball_fraction * tree.data_radius(ROOT);
    let ball = Ball::new(ds.row(center_index).to_vec(), big_r)?;
    let cell = smallest_containing_cell(&tree, &ball);
    let node = tree.node(cell);
    let cell_radius = tree.data_radius(cell);
    let ratio = if big_r > 0.0 { Some(cell_radius / big_r) } else { None };
    let values = vec![
        ("d", d.into()),
        ("D", dim.into()),
        ("R", big_r.into()),
        ("center_index", center_index.into()),
        ("cell_depth", node.depth.into()),
        ("cell_size", node.point_indices.len().into()),
        ("cell_radius", cell_radius.into()),
        ("is_leaf", node.is_leaf().into()),
        ("ratio", ratio.into()),
    ];
    Ok(vec![(values, ratio.is_none())])
}
