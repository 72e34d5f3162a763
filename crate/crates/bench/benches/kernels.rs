use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nlstrain_core::bound_state::solve_bound_state;
use nlstrain_core::duhamel::first_iterate;
use nlstrain_core::evolution::Integrator;
use nlstrain_core::kink::{find_kink_params, solve_kink_profile};
use nlstrain_core::train::preset;
use nlstrain_core::{BoundStateOptions, Field, Grid1D, Nonlinearity, PresetKind, SolitonParam, TimeGrid, Train, TrainSpec};

fn preset_a(j: usize, v_bar: f64) -> Train {
    Train::build(preset(PresetKind::A, j, v_bar, 0.0, Nonlinearity::pure_power(2.0)).unwrap()).unwrap()
}

fn bound_state(c: &mut Criterion) {
    let nl = Nonlinearity::double_power(1.0, 2.0);
    c.bench_function("bound_state/double_power", |b| {
        b.iter(|| solve_bound_state(&nl, black_box(0.1), 1, &BoundStateOptions::default()).unwrap())
    });
}

fn kink(c: &mut Criterion) {
    let nl = Nonlinearity::double_power(1.0, 2.0);
    c.bench_function("kink/profile", |b| {
        b.iter(|| {
            let p = find_kink_params(&nl).unwrap();
            solve_kink_profile(&p, &nl, None, None).unwrap()
        })
    });
}

fn strang(c: &mut Criterion) {
    let grid = Grid1D::new(80.0, 1024).unwrap();
    let spec = TrainSpec {
        nl: Nonlinearity::pure_power(2.0),
        waves: vec![
            SolitonParam { omega: 1.0, v: 2.0, gamma: 0.0, x0: -6.0 },
            SolitonParam { omega: 0.5, v: -2.0, gamma: 0.0, x0: 6.0 },
        ],
        kink: None,
        r0: None,
        law: None,
    };
    let train = Train::build(spec).unwrap().with_frame(0.0).unwrap();
    let u0 = Field::new(0.0, train.sample(0.0, &grid).w);
    let nl = train.nl().clone();
    c.bench_function("evolution/collision_100_steps", |b| {
        b.iter(|| {
            let mut u = u0.clone();
            Integrator::new(&grid, &nl).evolve(&mut u, 1.0, 0.01).unwrap()
        })
    });
}

fn source(c: &mut Criterion) {
    let train = preset_a(3, 20.0);
    let grid = Grid1D::new(2560.0, 1 << 17).unwrap();
    c.bench_function("train/source_2^17", |b| b.iter(|| train.source_values(black_box(1.0), &grid)));
    c.bench_function("train/sample_2^17", |b| b.iter(|| train.sample(black_box(1.0), &grid)));
}

fn duhamel(c: &mut Criterion) {
    let train = preset_a(2, 20.0);
    let grid = Grid1D::new(512.0, 1 << 13).unwrap();
    let tg = TimeGrid::new(1.0, 50).unwrap().resolved(&train);
    let mut group = c.benchmark_group("duhamel");
    group.sample_size(10);
    group.bench_function("first_iterate", |b| b.iter(|| first_iterate(&train, &tg, &grid, 1.0, &[0]).unwrap()));
    group.finish();
}

criterion_group!(benches, bound_state, kink, strang, source, duhamel);
criterion_main!(benches);
