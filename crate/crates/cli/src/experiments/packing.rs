use rand::Rng;
use rptlab_core::rptree::{packing_count, ROOT};
use rptlab_core::{build_tree, Ball};

use super::{tree_rng, Context, Job, Row};

pub const COLUMNS: &[&str] = &["d", "D", "R_over_r", "R", "r", "center_index", "count"];

/// Packing counts around one random data point, for every R/r on the same
/// tree and ball.
pub fn run(ctx: &Context, job: &Job, d: usize, dim: usize) -> anyhow::Result<Vec<Row>> {
    let ds = ctx.dataset(d, dim)?;
    let tree = build_tree(ds, ctx.cfg.build_params(), job.seed)?;
    let mut rng = tree_rng(job.seed);
    let ds = tree.dataset();
    let center_index = rng.random_range(0..ds.len());
    let big_r = ctx.cfg.grid.packing_ball_fraction * tree.data_radius(ROOT);
    let ball = Ball::new(ds.row(center_index).to_vec(), big_r)?;
    let mut rows = Vec::new();
    for &ratio in &ctx.cfg.grid.radius_ratios {
        let r = big_r / ratio;
        let count = if r > 0.0 { Some(packing_count(&tree, &ball, r)?) } else { None };
        let values = vec![
            ("d", d.into()),
            ("D", dim.into()),
            ("R_over_r", ratio.into()),
            ("R", big_r.into()),
            ("r", r.into()),
            ("center_index", center_index.into()),
            ("count", count.into()),
        ];
        rows.push((values, count.is_none()));
    }
    Ok(rows)
}
