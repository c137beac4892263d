use rptlab_core::rptree::{collect_level_radii, reduction_from_levels, Reduction, ROOT};
use rptlab_core::{build_tree, SplitRule};

use super::{Context, Job, Row};
use crate::record::Value;

pub const COLUMNS: &[&str] =
    &["d", "D", "n", "s", "levels", "root_radius", "tree_depth", "degenerate_leaves", "mean_shrink"];

/// Levels needed below the root to shrink every cell's radius by each s.
pub fn run(ctx: &Context, job: &Job, d: usize, dim: usize) -> anyhow::Result<Vec<Row>> {
    let ds = ctx.dataset(d, dim)?;
    let n = ds.len();
    let tree = build_tree(ds, ctx.cfg.build_params(), job.seed)?;
    let levels = collect_level_radii(&tree, ROOT);
    let root_radius = tree.data_radius(ROOT);
    let degenerate = tree.leaves().filter(|&id| tree.node(id).degenerate).count();
    let mut rows = Vec::new();
    for &s in &ctx.cfg.grid.s {
        let reduction = if root_radius > 0.0 { reduction_from_levels(&levels, root_radius / s) } else { Reduction::Levels(0) };
        let l = reduction.levels();
        // Per-level shrink of the mean cell radius, averaged geometrically.
        let shrink = match (ctx.cfg.rule, l) {
            (SplitRule::Mean, Some(l)) if l > 0 && levels[l].mean_radius > 0.0 => {
                Some((levels[l].mean_radius / levels[0].mean_radius).powf(1.0 / l as f64))
            }
            _ => None,
        };
        let values = vec![
            ("d", d.into()),
            ("D", dim.into()),
            ("n", n.into()),
            ("s", s.into()),
            ("levels", l.into()),
            ("root_radius", root_radius.into()),
            ("tree_depth", tree.max_depth().into()),
            ("degenerate_leaves", degenerate.into()),
            ("mean_shrink", Value::from(shrink)),
        ];
        rows.push((values, l.is_none()));
    }
    Ok(rows)
}
