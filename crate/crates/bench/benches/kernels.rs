use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nspg::decay::{cond_c_estimator, DecayConfig};
use nspg::fields::{make_gaussian_vortex, make_taylor_green, AnalyticField, DecayClass, FieldMeta, Grid3, Quadratic, Rank, SampledField, TimeGrid};
use nspg::kernels::{kernel_contract, kernel_k};
use nspg::pressure::{expansion_at, PressureConfig};
use nspg::spectral::riesz_pair_apply;
use nspg::{BallSpec, Sym3};

fn kernel(c: &mut Criterion) {
    let y = [0.3, -0.7, 1.1];
    c.bench_function("kernel_k", |b| b.iter(|| kernel_k(black_box(0), black_box(2), black_box(y))));
    let s = Sym3::outer([1.0, 0.5, -0.2], [0.3, 0.1, 0.9]);
    c.bench_function("kernel_contract", |b| b.iter(|| kernel_contract(black_box(y), black_box(&s))));
}

fn riesz(c: &mut Criterion) {
    let grid = Grid3::new([-4.0; 3], 0.25, [32; 3]).unwrap();
    let times = TimeGrid::new(0.0, 1.0, 2).unwrap();
    let one: Vec<f64> = (0..grid.len())
        .map(|m| {
            let x = grid.node(grid.unflat(m));
            (-2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        })
        .collect();
    let f = SampledField::new(grid, times, Rank::Scalar, [one.clone(), one].concat(), FieldMeta::new("g", DecayClass::Gaussian)).unwrap();
    let mut g = c.benchmark_group("riesz");
    g.sample_size(10);
    g.bench_function("pair_apply_32cubed", |b| b.iter(|| riesz_pair_apply(black_box(&f), 0, 1).unwrap()));
    g.finish();
}

fn pressure(c: &mut Criterion) {
    let cfg = PressureConfig::default();
    let ball = BallSpec::new([0.0; 3], 1.0).unwrap();
    let (u, _) = make_taylor_green(1.0).unwrap();
    let tg = Quadratic::new(u);
    let gauss = Quadratic::new(make_gaussian_vortex(1.0, 1.0).unwrap());
    let x = [0.2, -0.3, 0.1];
    let mut g = c.benchmark_group("expansion_at");
    g.sample_size(10);
    g.bench_function("taylor_green", |b| b.iter(|| expansion_at(&tg, &ball, black_box(x), 0.5, &cfg).unwrap()));
    g.bench_function("gaussian_vortex", |b| b.iter(|| expansion_at(&gauss, &ball, black_box(x), 0.0, &cfg).unwrap()));
    g.finish();
}

fn decay(c: &mut Criterion) {
    let u = AnalyticField::Vector(make_gaussian_vortex(1.0, 1.0).unwrap());
    let cfg = DecayConfig::default();
    let mut g = c.benchmark_group("decay");
    g.sample_size(10);
    g.bench_function("cond_c_r8", |b| b.iter(|| cond_c_estimator(&u, black_box(8.0), &cfg)));
    g.finish();
}

criterion_group!(benches, kernel, riesz, pressure, decay);
criterion_main!(benches);
