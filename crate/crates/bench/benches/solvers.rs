use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sabotage_bench::{escape, ladder, model};
use sabotage_core::atl::{brute_force_check, check_state, parse_formula, DEFAULT_BUDGET};
use sabotage_core::epistemic::{check_imp, Relations};
use sabotage_core::mincut::{dynamic_min_cut, static_min_cut};
use sabotage_core::sml::{build_gamma, eval_sml, model_of};
use sabotage_core::StructureKind;

fn cuts(c: &mut Criterion) {
    let mut group = c.benchmark_group("cut");
    for rungs in [2, 3, 4] {
        let g = ladder(rungs);
        let (s, t) = (g.start(), g.goal().unwrap());
        group.bench_with_input(BenchmarkId::new("static", rungs), &g, |b, g| {
            b.iter(|| static_min_cut(g, s, t).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dynamic", rungs), &g, |b, g| {
            b.iter(|| dynamic_min_cut(g, s, t).unwrap())
        });
    }
    group.finish();
}

fn checking(c: &mut Criterion) {
    let mut group = c.benchmark_group("check");
    let escape_formula = parse_formula("<<d>> F[<=6] (<<>> G !g)").unwrap();
    let tb = model(StructureKind::Tb, escape());
    let s0 = tb.arena.initial_state();
    group.bench_function("tb_escape", |b| {
        b.iter(|| check_state(black_box(&tb), &s0, &escape_formula).unwrap())
    });
    group.bench_function("oracle_escape", |b| {
        b.iter(|| brute_force_check(black_box(&tb), &s0, &escape_formula, DEFAULT_BUDGET).unwrap())
    });
    let reach = parse_formula("<<r>> F g").unwrap();
    for rungs in [2, 3] {
        let con = model(StructureKind::Con, ladder(rungs));
        let s = con.arena.initial_state();
        group.bench_with_input(BenchmarkId::new("con_reach", rungs), &con, |b, m| {
            b.iter(|| check_state(m, &s, &reach).unwrap())
        });
    }
    let rel = Relations::default();
    group.bench_function("imp_escape", |b| {
        b.iter(|| check_imp(black_box(&tb), &rel, &s0, &reach).unwrap())
    });
    group.finish();
}

fn sml(c: &mut Criterion) {
    let mut group = c.benchmark_group("sml");
    let g = escape();
    let m = model_of(&g, &model(StructureKind::Tb, g.clone()).arena.initial_state(), g.goal());
    for b in [1, 2] {
        let f = build_gamma(b).unwrap();
        group.bench_with_input(BenchmarkId::new("gamma", b), &f, |bench, f| {
            bench.iter(|| eval_sml(&m, g.start(), f).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cuts, checking, sml);
criterion_main!(benches);
