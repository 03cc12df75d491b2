use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraisse::checkers::boolean::BooleanDriver;
use fraisse::checkers::relational::{Graph, LinearOrder, RelationalDriver};
use fraisse::checkers::{check_jep, check_wap};
use fraisse::enumerate::permutations;
use fraisse::exec::{self, Execution};
use fraisse::grid::{factor_grid_permutation, GridPermutation};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn checkers(c: &mut Criterion) {
    let mut g = c.benchmark_group("check");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new("graph-jep-n1-b4", name), &mode, |b, &mode| {
            b.iter(|| check_jep(&RelationalDriver::new(Graph), 1, 4, None, mode).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("linear-order-wap-b3", name), &mode, |b, &mode| {
            b.iter(|| check_wap(&RelationalDriver::new(LinearOrder), 1, 3, mode).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("boolean-jep-n1-b3", name), &mode, |b, &mode| {
            b.iter(|| check_jep(&BooleanDriver::default(), 1, 3, None, mode).unwrap())
        });
    }
    g.finish();
}

fn grids(c: &mut Criterion) {
    let perms = permutations(8);
    let mut g = c.benchmark_group("factor-grid-2x4-all");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                exec::all_range(mode, perms.len(), |i| {
                    let rho = GridPermutation::new(2, 4, perms[i].clone()).unwrap();
                    factor_grid_permutation(&rho).is_ok()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, checkers, grids);
criterion_main!(benches);
