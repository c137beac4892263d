use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rptlab_bench::flat;
use rptlab_core::math::{covariance_and_mean, jacobi_eigen, meb_radius, DEFAULT_MEB_TOLERANCE};
use rptlab_core::rptree::{collect_level_radii, ROOT};
use rptlab_core::{build_tree, BuildParams, SplitRule};

fn tree_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_tree");
    g.sample_size(10);
    for &n in &[2_000usize, 20_000] {
        let ds = flat(2, 50, n);
        for rule in [SplitRule::Max, SplitRule::Mean] {
            let id = BenchmarkId::new(format!("{rule:?}"), n);
            g.bench_with_input(id, &ds, |b, ds| {
                b.iter(|| build_tree(ds.clone(), BuildParams::with_rule(rule), 7).unwrap())
            });
        }
    }
    g.finish();
}

fn all_radii(c: &mut Criterion) {
    let ds = flat(2, 50, 5_000);
    c.bench_function("level_radii/5000", |b| {
        b.iter(|| {
            let tree = build_tree(ds.clone(), BuildParams::default(), 3).unwrap();
            collect_level_radii(&tree, ROOT)
        })
    });
}

fn meb(c: &mut Criterion) {
    let mut g = c.benchmark_group("meb_radius");
    for &(n, dim) in &[(1_000usize, 10usize), (10_000, 50), (2_000, 200)] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        g.bench_function(BenchmarkId::from_parameter(format!("{n}x{dim}")), |b| {
            b.iter(|| meb_radius(&refs, DEFAULT_MEB_TOLERANCE).unwrap())
        });
    }
    g.finish();
}

fn jacobi(c: &mut Criterion) {
    let mut g = c.benchmark_group("jacobi_eigen");
    for &dim in &[10usize, 50, 100] {
        let ds = flat(dim.min(8), dim, 4 * dim);
        let (_, cov) = covariance_and_mean(&ds.refs()).unwrap();
        g.bench_function(BenchmarkId::from_parameter(dim), |b| b.iter(|| jacobi_eigen(&cov)));
    }
    g.finish();
}

criterion_group!(benches, tree_build, all_radii, meb, jacobi);
criterion_main!(benches);
