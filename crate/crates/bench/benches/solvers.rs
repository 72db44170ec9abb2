use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use trial_error::core_game::CoreOracle;
use trial_error::dpll::dpll_solve;
use trial_error::ellipsoid::solve_core;
use trial_error::extensions::{count_extensions, good_order};
use trial_error::gen;
use trial_error::graph_iso::{find_clique_via_reduction, solve_graph_iso, GraphIsoOracle};
use trial_error::sat::{alg_sat, SatOracle};
use trial_error::sort::{solve_sort, HiddenOrder, SortOracle};
use trial_error::trial::OracleBudget;

fn extensions(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_extensions");
    for n in [8, 12, 16] {
        let p = gen::random_poset(n, 0.15, &mut gen::rng(1)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| count_extensions(black_box(p)).unwrap())
        });
    }
    group.finish();
    let p = gen::random_poset(12, 0.1, &mut gen::rng(2)).unwrap();
    c.bench_function("good_order/12", |b| {
        b.iter(|| good_order(black_box(&p)).unwrap())
    });
}

fn sort(c: &mut Criterion) {
    let hidden = HiddenOrder::new(gen::random_permutation(10, &mut gen::rng(3))).unwrap();
    c.bench_function("solve_sort/10", |b| {
        b.iter(|| {
            let mut oracle = SortOracle::new(hidden.clone());
            solve_sort(&mut oracle, 10, OracleBudget::unlimited()).unwrap()
        })
    });
}

fn sat(c: &mut Criterion) {
    let cnf = gen::random_cnf(40, 170, Some(3), &mut gen::rng(4)).unwrap();
    c.bench_function("dpll/40x170", |b| {
        b.iter(|| dpll_solve(black_box(&cnf)).unwrap())
    });
    let mut group = c.benchmark_group("alg_sat");
    for (n, m) in [(10, 30), (16, 60)] {
        let cnf = gen::random_cnf(n, m, Some(3), &mut gen::rng(5)).unwrap();
        group.bench_with_input(
            BenchmarkId::new("random", format!("{n}x{m}")),
            &cnf,
            |b, cnf| {
                b.iter(|| {
                    let mut oracle = SatOracle::new(cnf.clone());
                    alg_sat(&mut oracle, n, m, OracleBudget::unlimited()).unwrap()
                })
            },
        );
    }
    group.finish();
}

fn graphs(c: &mut Criterion) {
    let mut rng = gen::rng(6);
    let g1 = gen::random_graph(10, 0.5, &mut rng).unwrap();
    let pi = gen::random_permutation(10, &mut rng);
    let mut g2 = trial_error::graph::Graph::empty(10).unwrap();
    for (u, v) in g1.edges() {
        g2.add_edge(pi[u], pi[v]).unwrap();
    }
    c.bench_function("solve_graph_iso/10", |b| {
        b.iter(|| {
            let mut oracle = GraphIsoOracle::new(g1.clone(), g2.clone()).unwrap();
            solve_graph_iso(&mut oracle, 10, OracleBudget::unlimited()).unwrap()
        })
    });
    c.bench_function("clique_reduction/10", |b| {
        b.iter(|| find_clique_via_reduction(black_box(&g1), 4).unwrap())
    });
}

fn core(c: &mut Criterion) {
    let mut group = c.benchmark_group("ellipsoid_core");
    group.sample_size(10);
    for n in [2, 3, 4] {
        let game = gen::random_monotone_game(n, 8, 2, &mut gen::rng(7)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &game, |b, game| {
            b.iter(|| {
                let mut oracle = CoreOracle::new(game.clone());
                solve_core(
                    &mut oracle,
                    n,
                    game.encoding_bits(),
                    OracleBudget::unlimited(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, extensions, sort, sat, graphs, core);
criterion_main!(benches);
